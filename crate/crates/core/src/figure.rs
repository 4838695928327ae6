//! Datasets behind the three AoI figure panels: pmf curves, cdf curves and
//! the discrete-versus-continuous mean sweep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic::{aoi_distribution_geo, mean_aoi_geo, mean_aoi_mm11};
use crate::distribution::AoiDistribution;
use crate::error::{AoiError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Config {
    /// `(p, gamma)` pairs for the pmf/cdf panels.
    pub pairs: Vec<(f64, f64)>,
    /// Service probabilities held fixed in the mean sweep.
    pub gammas: Vec<f64>,
    /// Discrete traffic intensities `rho_d = p / gamma` in `(0, 1)`.
    pub rhos: Vec<f64>,
    pub tol: f64,
}

impl Default for Figure3Config {
    fn default() -> Self {
        Self {
            pairs: vec![(0.15, 0.3), (0.35, 0.7)],
            gammas: vec![0.3, 0.5, 0.7],
            rhos: (1..20).map(|i| i as f64 * 0.05).collect(),
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCurve {
    pub p: f64,
    pub gamma: f64,
    pub dist: AoiDistribution,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanPoint {
    pub gamma: f64,
    pub rho: f64,
    /// Discrete mean in slots.
    pub discrete: f64,
    /// M/M/1/1 mean with `mu = gamma`, `lambda = rho * gamma`.
    pub continuous: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure3Data {
    /// Common horizon of all curves.
    pub horizon: usize,
    pub curves: Vec<PairCurve>,
    pub means: Vec<MeanPoint>,
}

pub fn build_figure3(config: &Figure3Config) -> Result<Figure3Data> {
    if config.pairs.is_empty() {
        return Err(AoiError::InvalidParameter("need at least one (p, gamma) pair".into()));
    }
    if let Some(rho) = config.rhos.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(AoiError::InvalidParameter(format!(
            "traffic intensities must lie in (0, 1), got {rho}"
        )));
    }
    let mut horizon = 1;
    for &(p, gamma) in &config.pairs {
        horizon = horizon.max(aoi_distribution_geo(p, gamma, None, config.tol)?.n_max());
    }
    let curves = config
        .pairs
        .iter()
        .map(|&(p, gamma)| {
            Ok(PairCurve {
                p,
                gamma,
                dist: aoi_distribution_geo(p, gamma, Some(horizon), config.tol)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut means = Vec::with_capacity(config.gammas.len() * config.rhos.len());
    for &gamma in &config.gammas {
        for &rho in &config.rhos {
            means.push(MeanPoint {
                gamma,
                rho,
                discrete: mean_aoi_geo(rho * gamma, gamma)?,
                continuous: mean_aoi_mm11(rho * gamma, gamma)?,
            });
        }
    }
    Ok(Figure3Data {
        horizon,
        curves,
        means,
    })
}

/// `(gamma, gamma * mean)` for fixed `rho_d`; the scaled mean tends to the
/// unit-rate M/M/1/1 value as `gamma -> 0`.
pub fn scaled_mean_sweep(rho: f64, gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
    gammas
        .iter()
        .map(|&g| Ok((g, g * mean_aoi_geo(rho * g, g)?)))
        .collect()
}

fn curve_header(curves: &[PairCurve], prefix: &str) -> String {
    let mut h = String::from("n");
    for c in curves {
        h.push_str(&format!(",{prefix}_p{}_g{}", c.p, c.gamma));
    }
    h
}

impl Figure3Data {
    pub fn write_pmf_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        self.write_curves(w, "pmf", |d, n| d.pmf(n))
    }

    pub fn write_cdf_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        self.write_curves(w, "cdf", |d, n| d.cdf(n))
    }

    fn write_curves<W: Write>(
        &self,
        mut w: W,
        prefix: &str,
        value: impl Fn(&AoiDistribution, usize) -> f64,
    ) -> std::io::Result<()> {
        writeln!(w, "{}", curve_header(&self.curves, prefix))?;
        for n in 1..=self.horizon {
            write!(w, "{n}")?;
            for c in &self.curves {
                write!(w, ",{}", value(&c.dist, n))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_mean_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "gamma,rho,discrete_mean,continuous_mean")?;
        for m in &self.means {
            writeln!(w, "{},{},{},{}", m.gamma, m.rho, m.discrete, m.continuous)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn larger_pair_is_more_concentrated() {
        let data = build_figure3(&Figure3Config::default()).unwrap();
        let (small, large) = (&data.curves[0].dist, &data.curves[1].dist);
        assert!(large.peak().1 > small.peak().1);
        assert!(large.quantile(0.99).unwrap() < small.quantile(0.99).unwrap());
        for c in &data.curves {
            assert!(c.dist.cdf_values().windows(2).all(|w| w[1] >= w[0]));
            assert!(c.dist.cdf(data.horizon) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn small_gamma_scaled_mean_approaches_continuous_limit() {
        let sweep = scaled_mean_sweep(0.5, &[0.001]).unwrap();
        let limit = 10.0 / 3.0;
        assert!(((sweep[0].1 - limit) / limit).abs() < 5e-4);
    }

    #[test]
    fn csv_shapes() {
        let cfg = Figure3Config {
            rhos: vec![0.5],
            gammas: vec![0.5],
            ..Figure3Config::default()
        };
        let data = build_figure3(&cfg).unwrap();
        let mut buf = Vec::new();
        data.write_pmf_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,pmf_p0.15_g0.3,pmf_p0.35_g0.7\n"));
        assert_eq!(text.lines().count(), data.horizon + 1);
        let mut buf = Vec::new();
        data.write_mean_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0.5,0.5,5.4,6.666666666666667");
    }

    #[test]
    fn rejects_bad_grid() {
        let cfg = Figure3Config {
            rhos: vec![1.0],
            ..Figure3Config::default()
        };
        assert!(build_figure3(&cfg).is_err());
    }
}
