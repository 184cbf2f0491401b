use crate::criteria::{self, CriterionReport, VerificationContext};
use crate::error::{HvError, Result};
use crate::gaussian::generate_fgn_circulant;
use crate::harness::{load_results, persist_results, run_experiment, write_csv_summary, ExperimentConfig};
use crate::params::{
    a_constant, c1_constant, combinatorial_coefficient, d_constant, derive_params, x_constants,
};
use crate::quad::{expected_t2_squared, expected_t2q2k_squared_bound, QuadratureSpec};
use crate::rng::RandomStream;
use crate::simulator::simulate_path;
use crate::variation::VariationReport;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hermite",
    about = "Simulation and quadratic-variation analysis of Hermite processes",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SeedOpt {
    /// RNG seed; omitted seeds are generated and printed for reproducibility
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived parameters and closed-form constants for (H, q)
    Constants {
        #[arg(long = "H")]
        h: f64,
        #[arg(long)]
        q: u32,
    },
    /// Simulate one process path (or run a config-driven experiment grid)
    Simulate {
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long)]
        q: Option<u32>,
        /// Observation grid size
        #[arg(long = "N")]
        n: Option<usize>,
        /// Oversampling factor for the internal grid
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[command(flatten)]
        seed: SeedOpt,
        /// Output directory (path file plus meta.json); stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Dump the raw driving fGn series instead of the process path
        #[arg(long = "raw-fgn")]
        raw_fgn: bool,
        /// Experiment config JSON: runs the whole grid and writes
        /// results.json plus summary.csv into --out
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute variation statistics and the Hurst estimate from a path CSV
    Estimate {
        /// Input CSV with header t,value
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        q: u32,
        /// True H for centering and normalized statistics; defaults to the
        /// estimated value for centering
        #[arg(long = "H")]
        h: Option<f64>,
    },
    /// Deterministic chaos-variance oracle sweep (CSV: N,k,value,asymptote,ratio)
    Oracle {
        #[arg(long = "H")]
        h: f64,
        #[arg(long)]
        q: u32,
        /// Largest grid size of the dyadic sweep starting at 64
        #[arg(long = "N", default_value_t = 512)]
        n: u64,
        /// Contraction order: q-1 (the dominant term) when omitted
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check variance scaling, chaos dominance and fourth-moment scaling
    VerifyVariance {
        #[command(flatten)]
        seed: SeedOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Rosenblatt limit law and the q=1 Gaussian regime
    VerifyLimit {
        #[command(flatten)]
        seed: SeedOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the limit moments of the rescaled estimation error
    VerifyEstimator {
        #[command(flatten)]
        seed: SeedOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check generator exactness, the increment law and estimator consistency
    VerifyConsistency {
        #[command(flatten)]
        seed: SeedOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_seed(opt: &SeedOpt) -> u64 {
    match opt.seed {
        Some(s) => s,
        None => {
            let s = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0)
                ^ (std::process::id() as u64) << 32;
            eprintln!("seed: {s}");
            s
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return 1;
            }
            print!("{e}");
            return 0;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Constants { h, q } => constants_cmd(h, q),
        Command::Simulate { h, q, n, m, seed, out, format, raw_fgn, config } => {
            simulate_cmd(h, q, n, m, seed, out, format, raw_fgn, config)
        }
        Command::Estimate { input, q, h } => estimate_cmd(&input, q, h),
        Command::Oracle { h, q, n, k, out } => oracle_cmd(h, q, n, k, out),
        Command::VerifyVariance { seed, out } => {
            verify_cmd(resolve_seed(&seed), out, criteria::verify_variance)
        }
        Command::VerifyLimit { seed, out } => {
            verify_cmd(resolve_seed(&seed), out, criteria::verify_limit)
        }
        Command::VerifyEstimator { seed, out } => {
            verify_cmd(resolve_seed(&seed), out, criteria::verify_estimator)
        }
        Command::VerifyConsistency { seed, out } => {
            verify_cmd(resolve_seed(&seed), out, criteria::verify_consistency)
        }
    }
}

fn constants_cmd(h: f64, q: u32) -> Result<i32> {
    let p = derive_params(h, q)?;
    let x = x_constants(&p);
    let mut comb = serde_json::Map::new();
    for k in 0..q {
        comb.insert(k.to_string(), combinatorial_coefficient(q, k)?.into());
    }
    let mut z = serde_json::Map::new();
    for k in 1..q.saturating_sub(1) {
        z.insert(k.to_string(), crate::params::z_constant(&p, k)?.into());
    }
    let out = serde_json::json!({
        "H": p.h,
        "q": p.q,
        "hPrime": p.h_prime,
        "hSecond": p.h_second,
        "d": d_constant(&p),
        "a": a_constant(p.h_prime),
        "c1": c1_constant(&p).ok(),
        "c2": combinatorial_coefficient(q, q - 1)?,
        "comb": comb,
        "z": z,
        "x1": x.x1,
        "x2": x.x2,
        "x3": x.x3,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    h: Option<f64>,
    q: Option<u32>,
    n: Option<usize>,
    m: usize,
    seed: SeedOpt,
    out: Option<PathBuf>,
    format: Format,
    raw_fgn: bool,
    config: Option<PathBuf>,
) -> Result<i32> {
    if let Some(cfg_path) = config {
        let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(cfg_path)?)?;
        let results = run_experiment(&cfg)?;
        let dir = out.ok_or_else(|| HvError::Config("--config requires --out".into()))?;
        std::fs::create_dir_all(&dir)?;
        persist_results(&results, &dir.join("results.json"))?;
        write_csv_summary(&results, &dir.join("summary.csv"))?;
        println!("wrote {} cells to {}", results.len(), dir.display());
        return Ok(0);
    }
    let h = h.ok_or_else(|| HvError::Config("--H is required".into()))?;
    let n = n.ok_or_else(|| HvError::Config("--N is required".into()))?;
    let seed = resolve_seed(&seed);
    let stream = RandomStream::new(seed, 0);
    if raw_fgn {
        let series = generate_fgn_circulant(h, n, stream)?;
        let mut text = String::from("value\n");
        for v in &series.values {
            text.push_str(&format!("{v}\n"));
        }
        emit(out.as_deref(), "fgn.csv", &text)?;
        return Ok(0);
    }
    let q = q.ok_or_else(|| HvError::Config("--q is required".into()))?;
    let params = derive_params(h, q)?;
    let path = simulate_path(&params, n, m, stream)?;
    match format {
        Format::Csv => {
            let mut text = String::from("t,value\n");
            for (i, v) in path.values.iter().enumerate() {
                text.push_str(&format!("{},{v}\n", i as f64 / n as f64));
            }
            emit(out.as_deref(), "path.csv", &text)?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&path)?;
            emit(out.as_deref(), "path.json", &text)?;
        }
    }
    if let Some(dir) = &out {
        let meta = serde_json::json!({
            "H": h, "q": q, "N": n, "m": m, "seed": seed, "sigmaN": path.sigma_n,
        });
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    Ok(0)
}

fn emit(out: Option<&std::path::Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn estimate_cmd(input: &std::path::Path, q: u32, h: Option<f64>) -> Result<i32> {
    let mut reader = csv::Reader::from_path(input)?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let v: f64 = record
            .get(1)
            .ok_or_else(|| HvError::Config("path CSV needs columns t,value".into()))?
            .parse()
            .map_err(|e| HvError::Config(format!("bad value field: {e}")))?;
        values.push(v);
    }
    if values.len() < 3 {
        return Err(HvError::Config("path CSV needs at least 3 rows".into()));
    }
    let n = values.len() - 1;
    let mut t = 0.0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        t += d * d;
    }
    let s_n = t / n as f64;
    if s_n <= 0.0 {
        return Err(HvError::Degenerate("S_N = 0".into()));
    }
    let h_hat = -s_n.ln() / (2.0 * (n as f64).ln());
    let center = h.unwrap_or(h_hat);
    let v_n = (n as f64).powf(2.0 * center) * s_n - 1.0;
    let (normalized_v_n, normalized_error) = match h {
        Some(true_h) => {
            let params = derive_params(true_h, q)?;
            (
                crate::variation::normalized_limit_statistic(v_n, &params, n).ok(),
                Some(crate::variation::plugin_normalized_error(h_hat, true_h, &params, n)),
            )
        }
        None => (None, None),
    };
    let report = VariationReport { n, v_n, s_n, h_hat, normalized_v_n, normalized_error, true_h: h };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn oracle_cmd(h: f64, q: u32, n_max: u64, k: Option<u32>, out: Option<PathBuf>) -> Result<i32> {
    let params = derive_params(h, q)?;
    let spec = QuadratureSpec::default();
    let k_eff = k.unwrap_or(q - 1);
    let mut grid = Vec::new();
    let mut n = 64u64.min(n_max);
    while n <= n_max {
        grid.push(n);
        n *= 2;
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&n| {
            if k_eff == q - 1 {
                expected_t2_squared(&params, n, &spec)
            } else {
                expected_t2q2k_squared_bound(&params, k_eff, n, &spec)
            }
        })
        .collect::<Result<_>>()?;
    let mut text = String::from("N,k,value,asymptote,ratio\n");
    for (i, &n) in grid.iter().enumerate() {
        let nf = n as f64;
        let asymptote = if k_eff == q - 1 {
            c1_constant(&params)? * nf.powf(2.0 * (2.0 * params.h_prime - 2.0))
        } else {
            // scaling reference anchored at the largest grid size
            let n_ref = *grid.last().unwrap() as f64;
            let expo = (2.0 * params.h_prime - 2.0) * (2 * (q - k_eff)) as f64;
            values[grid.len() - 1] * (nf / n_ref).powf(expo)
        };
        text.push_str(&format!("{n},{k_eff},{},{asymptote},{}\n", values[i], values[i] / asymptote));
    }
    emit(out.as_deref(), "oracle.csv", &text)?;
    Ok(0)
}

fn verify_cmd(
    seed: u64,
    out: Option<PathBuf>,
    group: fn(&mut VerificationContext) -> Result<Vec<CriterionReport>>,
) -> Result<i32> {
    let mut ctx = VerificationContext::new(seed);
    let reports = group(&mut ctx)?;
    let mut all_ok = true;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for r in &reports {
        writeln!(lock, "{}", r.line())?;
        all_ok &= r.passed;
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(
            dir.join("verification.json"),
            serde_json::to_string_pretty(&reports)? + "\n",
        )?;
    }
    Ok(if all_ok { 0 } else { 2 })
}

// used by integration tests to sanity-check persisted experiment output
pub fn reload_results(path: &std::path::Path) -> Result<usize> {
    Ok(load_results(path)?.len())
}
