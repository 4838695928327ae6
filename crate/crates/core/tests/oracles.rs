use aoi_core::analytic::{aoi_pmf_general, SystemParams};
use aoi_core::chain::{chain_distribution, KernelSpec, SolveOptions};
use aoi_core::sim::{run, run_replication, SimulationConfig};
use aoi_core::ServiceDistribution;

#[test]
fn merged_replications_agree_with_one_long_run() {
    let service = ServiceDistribution::table(vec![0.2, 0.3, 0.5]).unwrap();
    let merged = run(
        &SimulationConfig::new(0.3, service.clone(), 250_000, 5)
            .unwrap()
            .with_replications(8),
    )
    .unwrap();
    let single = run_replication(&SimulationConfig::new(0.3, service, 2_000_000, 6).unwrap(), 0).unwrap();
    assert_eq!(merged.replication_means.len(), 8);
    let se = merged.replication_std_error().unwrap();
    assert!((merged.mean - single.mean).abs() < 5.0 * se * 2f64.sqrt(), "{} vs {}", merged.mean, single.mean);
    assert!(merged.distribution().total_variation(&single.distribution()) < 0.005);
}

#[test]
fn three_routes_agree_on_mixed_service() {
    let service = ServiceDistribution::table(vec![0.0, 0.4, 0.0, 0.6]).unwrap();
    let analytic = aoi_pmf_general(&SystemParams::new(0.4, service.clone()).unwrap()).unwrap();
    let (chain, report) =
        chain_distribution(&KernelSpec::new(0.4, service.clone(), 250).unwrap(), &SolveOptions::default()).unwrap();
    assert!(report.boundary_mass < 1e-12);
    assert!(analytic.max_abs_diff(&chain) < 1e-9);
    let sim = run_replication(&SimulationConfig::new(0.4, service, 3_000_000, 9).unwrap(), 0).unwrap();
    assert!(sim.distribution().total_variation(&analytic) < 0.005);
    assert!((sim.mean - analytic.mean()).abs() / analytic.mean() < 0.01);
}
