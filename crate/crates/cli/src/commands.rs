use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aoi_core::analytic::geo::{aoi_distribution_geo, DEGENERACY_EPS};
use aoi_core::analytic::aoi_pmf_general;
use aoi_core::chain::{build_kernel, chain_distribution, solve_stationary, KernelSpec, SolveOptions};
use aoi_core::export::{distribution_json, write_distribution_csv, write_histogram_csv};
use aoi_core::figure::{build_figure3, Figure3Config};
use aoi_core::sim::{self, SimulationConfig};
use aoi_core::{AoiDistribution, AoiError, KernelConvention, ServiceDistribution, SystemParams};
use serde_json::{json, Value};

use crate::args::{
    AnalyticArgs, ChainArgs, CompareArgs, Figure3Args, Format, OutputArgs, ServiceArgs,
    SimulateArgs,
};
use crate::error::CliError;

/// Files written by a subcommand plus the parameters that produced them.
pub struct Outcome {
    pub params: Value,
    pub outputs: Vec<PathBuf>,
    /// Set when the run completed and wrote its outputs but must still exit nonzero.
    pub failure: Option<CliError>,
}

pub fn load_service(args: &ServiceArgs) -> Result<ServiceDistribution, CliError> {
    if let Some(gamma) = args.geom {
        return Ok(ServiceDistribution::geometric(gamma)?);
    }
    if let Some(k) = args.det {
        return Ok(ServiceDistribution::deterministic(k)?);
    }
    let path = args.service.as_ref().expect("clap enforces one service source");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: bad service descriptor: {e}", path.display())))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(
    path: PathBuf,
    outputs: &mut Vec<PathBuf>,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&path, e))?;
    outputs.push(path);
    Ok(())
}

fn write_json(path: PathBuf, outputs: &mut Vec<PathBuf>, value: &Value) -> Result<(), CliError> {
    write_file(path, outputs, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn write_distribution(
    output: &OutputArgs,
    stem: &str,
    dist: &AoiDistribution,
    json: Value,
) -> Result<Vec<PathBuf>, CliError> {
    prepare_dir(&output.out)?;
    let mut outputs = Vec::new();
    if output.wants(Format::Csv) {
        write_file(output.out.join(format!("{stem}.csv")), &mut outputs, |w| {
            write_distribution_csv(dist, w)
        })?;
    }
    if output.wants(Format::Json) {
        write_json(output.out.join(format!("{stem}.json")), &mut outputs, &json)?;
    }
    Ok(outputs)
}

pub fn analytic(args: &AnalyticArgs) -> Result<Outcome, CliError> {
    let service = load_service(&args.service)?;
    let kernel: KernelConvention = args.kernel.into();
    let closed_form = match service.geometric_rate() {
        Some(gamma) if !args.force_general && kernel == KernelConvention::Paper => Some(gamma),
        _ => None,
    };

    let (dist, method) = match closed_form {
        Some(gamma) => {
            let dist = aoi_distribution_geo(args.p, gamma, args.nmax, args.tol).map_err(|e| match e {
                AoiError::Degenerate { p, gamma } => CliError::Config(format!(
                    "degenerate p=γ; use --force-general (p = {p}, gamma = {gamma}, closed forms need gamma - p > {DEGENERACY_EPS:e})"
                )),
                other => other.into(),
            })?;
            (dist, "geometric")
        }
        None => {
            let mut params = SystemParams::new(args.p, service.clone())?
                .with_tol(args.tol)
                .with_kernel(kernel);
            if let Some(n) = args.nmax {
                params = params.with_n_max(n);
            }
            (aoi_pmf_general(&params)?, "general")
        }
    };

    let params = json!({
        "p": args.p,
        "service": service.descriptor(),
        "n_max": dist.n_max(),
        "tol": args.tol,
        "kernel": kernel,
        "method": method,
    });
    let outputs = write_distribution(
        &args.output,
        "analytic",
        &dist,
        distribution_json(&params, &dist),
    )?;
    println!(
        "analytic ({method}): n_max = {}, mean = {}, tail = {:e}",
        dist.n_max(),
        dist.mean(),
        dist.tail()
    );
    Ok(Outcome {
        params,
        outputs,
        failure: None,
    })
}

pub fn chain(args: &ChainArgs) -> Result<Outcome, CliError> {
    let service = load_service(&args.service)?;
    let kernel: KernelConvention = args.kernel.into();
    let spec = KernelSpec::new(args.p, service.clone(), args.nmax)?.with_convention(kernel);
    let opts = SolveOptions {
        method: args.solver.into(),
        max_iter: args.max_iter,
        ..SolveOptions::default()
    };
    let built = build_kernel(&spec)?;
    let (table, report) = solve_stationary(&built, &opts)?;
    let dist = aoi_core::chain::aoi_marginal(&table);
    if report.boundary_mass > args.tol {
        eprintln!(
            "warning: boundary row n = {} carries mass {:e} > {:e}; increase --nmax",
            args.nmax, report.boundary_mass, args.tol
        );
    }

    let params = json!({
        "p": args.p,
        "service": service.descriptor(),
        "n_max": args.nmax,
        "tol": args.tol,
        "kernel": kernel,
        "solver": opts.method,
        "max_iter": opts.max_iter,
    });
    let mut body = distribution_json(&params, &dist);
    body["report"] = json!(report);
    let mut outputs = write_distribution(&args.output, "chain", &dist, body)?;
    if args.dump_kernel {
        write_file(args.output.out.join("kernel.csv"), &mut outputs, |w| {
            built.write_triplets(w)
        })?;
    }
    println!(
        "chain ({:?}, {} states, {} iterations): mean = {}, residual = {:e}, boundary mass = {:e}",
        report.method,
        report.n_states,
        report.iterations,
        dist.mean(),
        report.residual,
        report.boundary_mass
    );
    Ok(Outcome {
        params,
        outputs,
        failure: None,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let service = load_service(&args.service)?;
    let config = SimulationConfig::new(args.p, service, args.slots, args.seed)?
        .with_kernel(args.kernel.into())
        .with_replications(args.reps)
        .with_warmup(args.warmup);
    let result = sim::run(&config)?;

    prepare_dir(&args.output.out)?;
    let mut outputs = Vec::new();
    if args.output.wants(Format::Json) {
        write_json(args.output.out.join("sim.json"), &mut outputs, &json!(result))?;
    }
    if args.output.wants(Format::Csv) {
        write_file(args.output.out.join("sim_hist.csv"), &mut outputs, |w| {
            write_histogram_csv(&result, w)
        })?;
    }
    match result.replication_std_error() {
        Some(se) => println!("simulate: mean = {} (std. error {se:e})", result.mean),
        None => println!("simulate: mean = {}", result.mean),
    }
    Ok(Outcome {
        params: json!(config),
        outputs,
        failure: None,
    })
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad {what} entry {s:?}: {e}")))
        })
        .collect()
}

fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    text.split(',')
        .map(|pair| {
            let (p, g) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("pair {pair:?} is not p:gamma")))?;
            Ok((
                parse_list(p, "pair")?[0],
                parse_list(g, "pair")?[0],
            ))
        })
        .collect()
}

pub fn figure3(args: &Figure3Args) -> Result<Outcome, CliError> {
    if args.rho_steps == 0 {
        return Err(CliError::Config("--rho-steps must be positive".into()));
    }
    let step = 1.0 / (args.rho_steps + 1) as f64;
    let config = Figure3Config {
        pairs: parse_pairs(&args.pairs)?,
        gammas: parse_list(&args.gammas, "gamma")?,
        rhos: (1..=args.rho_steps).map(|i| i as f64 * step).collect(),
        tol: args.tol,
    };
    let data = build_figure3(&config)?;

    prepare_dir(&args.out)?;
    let mut outputs = Vec::new();
    write_file(args.out.join("fig3a_pmf.csv"), &mut outputs, |w| {
        data.write_pmf_csv(w)
    })?;
    write_file(args.out.join("fig3b_cdf.csv"), &mut outputs, |w| {
        data.write_cdf_csv(w)
    })?;
    write_file(args.out.join("fig3c_mean.csv"), &mut outputs, |w| {
        data.write_mean_csv(w)
    })?;
    println!(
        "figure3: {} curves to n = {}, {} mean points",
        data.curves.len(),
        data.horizon,
        data.means.len()
    );
    Ok(Outcome {
        params: json!(config),
        outputs,
        failure: None,
    })
}

struct Check {
    name: String,
    value: f64,
    threshold: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.threshold
    }
}

pub fn compare(args: &CompareArgs) -> Result<Outcome, CliError> {
    let service = load_service(&args.service)?;
    let kernel: KernelConvention = args.kernel.into();
    if kernel == KernelConvention::Natural && args.slots.is_none() {
        return Err(CliError::Config(
            "the natural kernel has no analytic path; pass --T to compare chain and simulation"
                .into(),
        ));
    }

    let spec = KernelSpec::new(args.p, service.clone(), args.nmax)?.with_convention(kernel);
    let (chain, report) = chain_distribution(&spec, &SolveOptions::default())?;
    let mut checks = Vec::new();

    if kernel == KernelConvention::Paper {
        let params = SystemParams::new(args.p, service.clone())?;
        let general = aoi_pmf_general(&params)?;
        checks.push(Check {
            name: "max|analytic - chain|".into(),
            value: general.max_abs_diff(&chain),
            threshold: args.threshold,
        });
        if let Some(gamma) = service.geometric_rate() {
            if gamma - args.p > DEGENERACY_EPS {
                let closed = aoi_distribution_geo(args.p, gamma, None, params.tol)?;
                checks.push(Check {
                    name: "max|closed form - general|".into(),
                    value: closed.max_abs_diff(&general),
                    threshold: args.threshold,
                });
            }
        }
    }

    if let Some(slots) = args.slots {
        let config =
            SimulationConfig::new(args.p, service.clone(), slots, args.seed)?.with_kernel(kernel);
        let result = sim::run(&config)?;
        checks.push(Check {
            name: "TV(simulation, chain)".into(),
            value: result.distribution().total_variation(&chain),
            threshold: args.tv_threshold,
        });
    }

    println!("{:<28} {:>12} {:>12}  status", "check", "value", "threshold");
    for c in &checks {
        println!(
            "{:<28} {:>12.3e} {:>12.3e}  {}",
            c.name,
            c.value,
            c.threshold,
            if c.pass() { "ok" } else { "FAIL" }
        );
    }
    let pass = checks.iter().all(Check::pass);

    let params = json!({
        "p": args.p,
        "service": service.descriptor(),
        "n_max": args.nmax,
        "kernel": kernel,
        "threshold": args.threshold,
        "T": args.slots,
        "seed": args.seed,
        "tv_threshold": args.tv_threshold,
    });
    let body = json!({
        "params": params,
        "chain_report": report,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "value": c.value,
            "threshold": c.threshold,
            "pass": c.pass(),
        })).collect::<Vec<_>>(),
        "pass": pass,
    });
    prepare_dir(&args.out)?;
    let mut outputs = Vec::new();
    write_json(args.out.join("compare.json"), &mut outputs, &body)?;

    let failure = (!pass).then(|| {
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass()).map(|c| c.name.as_str()).collect();
        CliError::Comparison(failed.join(", "))
    });
    Ok(Outcome {
        params,
        outputs,
        failure,
    })
}
