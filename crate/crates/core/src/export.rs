//! CSV and JSON emitters for distributions and simulation histograms.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::distribution::AoiDistribution;
use crate::sim::SimulationResult;

/// `n,pmf,cdf` rows for `n = 1..=n_max`. Floats use the shortest
/// representation that round-trips.
pub fn write_distribution_csv<W: Write>(dist: &AoiDistribution, mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,pmf,cdf")?;
    for (i, (pmf, cdf)) in dist.pmf_values().iter().zip(dist.cdf_values()).enumerate() {
        writeln!(w, "{},{},{}", i + 1, pmf, cdf)?;
    }
    Ok(())
}

/// `{params, pmf[], cdf[], mean, tail, provenance}`.
pub fn distribution_json<P: Serialize>(params: &P, dist: &AoiDistribution) -> Value {
    json!({
        "params": params,
        "pmf": dist.pmf_values(),
        "cdf": dist.cdf_values(),
        "mean": dist.mean(),
        "tail": dist.tail(),
        "provenance": dist.provenance(),
    })
}

/// `n,count,freq` rows for every observed AoI value.
pub fn write_histogram_csv<W: Write>(result: &SimulationResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,count,freq")?;
    for (i, &count) in result.histogram.iter().enumerate() {
        writeln!(w, "{},{},{}", i + 1, count, result.frequency(i + 1))?;
    }
    Ok(())
}

/// Parses `n,pmf,cdf` CSV back into `(pmf, cdf)` columns.
pub fn read_distribution_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut pmf = Vec::new();
    let mut cdf = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(format!("line {}: expected 3 columns", line_no + 1));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", line_no + 1));
        pmf.push(parse(cols[1])?);
        cdf.push(parse(cols[2])?);
    }
    Ok((pmf, cdf))
}
