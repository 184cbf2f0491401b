use crate::error::{HvError, Result};
use crate::params::derive_params;
use crate::rng::RandomStream;
use crate::simulator::{simulate_path, simulate_rosenblatt_marginal, DEFAULT_GRID_CEILING};
use crate::stats::{ks_two_sample, moment_report, regress_scaling, Moments};
use crate::variation::{variation_report, VariationReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Consistency,
    VarianceScaling,
    RosenblattLimit,
    EstimatorLimit,
    FourthMoment,
    CltQ1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub q_values: Vec<u32>,
    pub h_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub oversampling: usize,
    pub seed: u64,
    pub experiment_kind: ExperimentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub q: u32,
    pub h: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub stat: String,
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub cell: Cell,
    pub per_replicate: Vec<VariationReport>,
    pub summary: Vec<StatSummary>,
    /// (estimate, stderr) of the scaling regression across the N grid,
    /// identical on every cell of the same (q,H) group.
    pub slope: Option<(f64, f64)>,
    /// (statistic, (sample sizes)) of the distributional comparison.
    pub ks: Option<(f64, (usize, usize))>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(HvError::Config("replications must be >= 2".into()));
        }
        if self.q_values.is_empty() || self.h_values.is_empty() || self.n_values.is_empty() {
            return Err(HvError::Config("q_values, h_values, n_values must be nonempty".into()));
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(HvError::Config("n_values must be strictly increasing".into()));
        }
        if self.oversampling < 1 {
            return Err(HvError::Config("oversampling must be >= 1".into()));
        }
        // fail before any work if a cell would exceed the grid ceiling
        for &n in &self.n_values {
            match n.checked_mul(self.oversampling) {
                Some(total) if total <= DEFAULT_GRID_CEILING => {}
                _ => {
                    return Err(HvError::Config(format!(
                        "cell N={n}, m={} exceeds internal grid ceiling {DEFAULT_GRID_CEILING}",
                        self.oversampling
                    )))
                }
            }
        }
        for &h in &self.h_values {
            if !(h > 0.5 && h < 1.0) {
                return Err(HvError::Config(format!("H values must be in (1/2,1), got {h}")));
            }
        }
        Ok(())
    }
}

fn cell_label(cell: &Cell) -> String {
    format!("cell:q={},hbits={:016x},n={}", cell.q, cell.h.to_bits(), cell.n)
}

/// Statistic extracted per replicate for each experiment kind; summaries
/// report the moments of each.
pub fn tracked_statistics(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Consistency => &["h_hat", "abs_err"],
        ExperimentKind::VarianceScaling => &["v_n"],
        ExperimentKind::RosenblattLimit => &["normalized_v_n"],
        ExperimentKind::EstimatorLimit => &["normalized_error"],
        ExperimentKind::FourthMoment => &["v_n", "v_n_fourth"],
        ExperimentKind::CltQ1 => &["sqrt_n_v_n"],
    }
}

pub fn extract_statistic(stat: &str, r: &VariationReport) -> Option<f64> {
    match stat {
        "h_hat" => Some(r.h_hat),
        "abs_err" => r.true_h.map(|h| (r.h_hat - h).abs()),
        "v_n" => Some(r.v_n),
        "v_n_fourth" => Some(r.v_n.powi(4)),
        "normalized_v_n" => r.normalized_v_n,
        "normalized_error" => r.normalized_error,
        "sqrt_n_v_n" => Some((r.n as f64).sqrt() * r.v_n),
        _ => None,
    }
}

pub fn summarize(kind: ExperimentKind, reps: &[VariationReport]) -> Result<Vec<StatSummary>> {
    let mut out = Vec::new();
    for &stat in tracked_statistics(kind) {
        let sample: Vec<f64> = reps.iter().filter_map(|r| extract_statistic(stat, r)).collect();
        if sample.len() == reps.len() {
            out.push(StatSummary { stat: stat.to_string(), moments: moment_report(&sample)? });
        }
    }
    Ok(out)
}

/// Runs the configured Monte Carlo grid. Replicate r of each cell draws
/// from the stream derived from (cell, r), so results do not depend on the
/// worker count or schedule.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    config.validate()?;
    let base = RandomStream::new(config.seed, 0);
    let mut results = Vec::new();
    for &q in &config.q_values {
        for &h in &config.h_values {
            let params = derive_params(h, q)?;
            let mut group: Vec<ExperimentResult> = Vec::new();
            for &n in &config.n_values {
                let cell = Cell { q, h, n };
                let label = cell_label(&cell);
                let per_replicate: Vec<VariationReport> = (0..config.replications as u64)
                    .into_par_iter()
                    .map(|r| {
                        let path =
                            simulate_path(&params, n, config.oversampling, base.derive(&label, r))?;
                        variation_report(&path, Some(h))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let summary = summarize(config.experiment_kind, &per_replicate)?;
                let ks = match config.experiment_kind {
                    ExperimentKind::RosenblattLimit => {
                        let reference = simulate_rosenblatt_marginal(
                            params.h_second,
                            config.replications,
                            base.derive("rosenblatt-ref", 0),
                        )?;
                        let sample: Vec<f64> =
                            per_replicate.iter().filter_map(|r| r.normalized_v_n).collect();
                        Some((
                            ks_two_sample(&sample, &reference)?,
                            (sample.len(), reference.len()),
                        ))
                    }
                    _ => None,
                };
                group.push(ExperimentResult { cell, per_replicate, summary, slope: None, ks });
            }
            attach_slope(config.experiment_kind, &params, &mut group)?;
            results.append(&mut group);
        }
    }
    Ok(results)
}

/// Scaling regressions across the N grid: log Var(V_N) for the
/// variance-scaling experiment, log of the rescaled fourth moment for the
/// fourth-moment experiment.
fn attach_slope(
    kind: ExperimentKind,
    params: &crate::params::HurstParams,
    group: &mut [ExperimentResult],
) -> Result<()> {
    let stat = match kind {
        ExperimentKind::VarianceScaling => "v_n",
        ExperimentKind::FourthMoment => "v_n_fourth",
        _ => return Ok(()),
    };
    if group.len() < 3 {
        return Ok(());
    }
    let mut pts = Vec::new();
    for res in group.iter() {
        let m = res
            .summary
            .iter()
            .find(|s| s.stat == stat)
            .ok_or_else(|| HvError::Config(format!("missing tracked statistic {stat}")))?;
        let nf = res.cell.n as f64;
        let y = match kind {
            ExperimentKind::VarianceScaling => m.moments.variance.ln(),
            ExperimentKind::FourthMoment => {
                // E[V_N^4] N^{-2(4H'-4)} should be flat in N
                (m.moments.mean * nf.powf(-2.0 * (4.0 * params.h_prime - 4.0))).ln()
            }
            _ => unreachable!(),
        };
        pts.push((nf.ln(), y));
    }
    let slope = regress_scaling(&pts)?;
    for res in group.iter_mut() {
        res.slope = Some(slope);
    }
    Ok(())
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ResultsFile {
    schema_version: u32,
    results: Vec<ExperimentResult>,
}

pub fn persist_results(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let file = ResultsFile { schema_version: SCHEMA_VERSION, results: results.to_vec() };
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &file)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_results(path: &Path) -> Result<Vec<ExperimentResult>> {
    let data = std::fs::read_to_string(path)?;
    // check the version before strict decoding so schema drift reports as
    // a version error, not a parse error
    let probe: serde_json::Value = serde_json::from_str(&data)?;
    let found = probe
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or(HvError::Schema { found: 0, expected: SCHEMA_VERSION })? as u32;
    if found != SCHEMA_VERSION {
        return Err(HvError::Schema { found, expected: SCHEMA_VERSION });
    }
    let file: ResultsFile = serde_json::from_str(&data)?;
    Ok(file.results)
}

/// Flat CSV summary, one row per (cell, statistic).
pub fn write_csv_summary(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["q", "H", "N", "stat", "mean", "var", "skew", "kurt", "slope", "slope_se", "ks"])?;
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        for s in &r.summary {
            w.write_record([
                r.cell.q.to_string(),
                r.cell.h.to_string(),
                r.cell.n.to_string(),
                s.stat.clone(),
                s.moments.mean.to_string(),
                s.moments.variance.to_string(),
                fmt_opt(s.moments.skewness),
                fmt_opt(s.moments.excess_kurtosis),
                fmt_opt(r.slope.map(|p| p.0)),
                fmt_opt(r.slope.map(|p| p.1)),
                fmt_opt(r.ks.map(|p| p.0)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            q_values: vec![2],
            h_values: vec![0.8],
            n_values: vec![16, 32],
            replications: 8,
            oversampling: 4,
            seed: 99,
            experiment_kind: ExperimentKind::VarianceScaling,
        }
    }

    #[test]
    fn deterministic_rerun() {
        let cfg = small_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        cfg.replications = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.n_values = vec![32, 16];
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.oversampling = 1 << 30;
        assert!(matches!(cfg.validate(), Err(HvError::Config(_))));
    }

    #[test]
    fn summary_recomputable_from_replicates() {
        let cfg = small_config();
        let results = run_experiment(&cfg).unwrap();
        for r in &results {
            let again = summarize(cfg.experiment_kind, &r.per_replicate).unwrap();
            assert_eq!(again, r.summary);
        }
    }

    #[test]
    fn persist_round_trip() {
        let cfg = small_config();
        let results = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("results.json");
        persist_results(&results, &p).unwrap();
        let loaded = load_results(&p).unwrap();
        assert_eq!(results, loaded);
        let csv_path = dir.path().join("summary.csv");
        write_csv_summary(&results, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        // one header plus one row per (cell, stat)
        let rows: usize = results.iter().map(|r| r.summary.len()).sum();
        assert_eq!(text.lines().count(), rows + 1);
    }

    #[test]
    fn schema_version_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, r#"{"schema_version": 7, "results": []}"#).unwrap();
        match load_results(&p) {
            Err(HvError::Schema { found: 7, expected }) => assert_eq!(expected, SCHEMA_VERSION),
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
