//! Small numeric helpers shared by the solvers.

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// `a^n - b^n` for `a, b` in `(0, 1]`, accurate in relative terms even when
/// `a` and `b` are close. `a_minus_b` is passed separately so callers can
/// supply it without cancellation (e.g. `gamma - p` for `a = 1 - p`).
pub fn pow_diff(a: f64, b: f64, a_minus_b: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if b == 0.0 {
        return a.powi(n as i32);
    }
    // a^n - b^n = -a^n * expm1(n * ln(b / a))
    let log_ratio = (-a_minus_b / a).ln_1p();
    -a.powi(n as i32) * (n as f64 * log_ratio).exp_m1()
}

/// Total-variation distance `0.5 * sum |a_i - b_i|`; the shorter slice is
/// padded with zeros.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let diff = (0..len).map(|i| {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        (x - y).abs()
    });
    0.5 * compensated_sum(diff)
}
