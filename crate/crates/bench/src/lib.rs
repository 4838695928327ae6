//! Shared fixtures for the criterion benchmarks.

use aoi_core::ServiceDistribution;

/// `(label, p, service)` cases exercised by every benchmark group.
pub fn cases() -> Vec<(&'static str, f64, ServiceDistribution)> {
    vec![
        ("geo_p0.25_g0.5", 0.25, ServiceDistribution::geometric(0.5).unwrap()),
        ("det2_p0.25", 0.25, ServiceDistribution::deterministic(2).unwrap()),
        (
            "table_p0.25",
            0.25,
            ServiceDistribution::table(vec![0.5, 0.0, 0.5]).unwrap(),
        ),
    ]
}
