//! Command-line front end.
//!
//! Data goes to `--out` (or stdout); summaries go to stderr. Every flag can
//! also come from a TOML file given with `--config`, using the flag names with
//! `_` for `-` as keys (`problem`, `n`, `r`, `all`, `sizes`, `dataset`,
//! `variant`, `epochs`, `seed`, `batch_size`, `hidden`, `out`, `csv`).
//! Flags win over the file. `SPLINECOLLOC_THREADS` caps the worker pool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::abd::{benchmark_scaling, BlockWidth};
use crate::baselines::{best_resolution, compare_methods, ErrorTable};
use crate::datagen::ANALYTIC_NAMES;
use crate::error::{invalid, Error, Result};
use crate::osc1d::{poly_exact_coeffs, poly_ode_problem, sine_ode_problem, solve_osc1d};
use crate::basis::monomial_eval;
use crate::surrogate::{metrics_csv, train, Checkpoint, Dataset, ToyConfig, ToyKind, TrainConfig, Variant};

pub const THREADS_ENV: &str = "SPLINECOLLOC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "splinecolloc", version, about = "Orthogonal spline collocation tools")]
pub struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a model ODE by collocation and emit samples of the solution.
    OscDemo {
        /// `a3` (u + u' = sin 2πx + 2π cos 2πx) or `poly-exact`.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error table of OSC against the reference interpolators.
    Compare {
        #[arg(long)]
        problem: Option<String>,
        /// Run all four analytic problems.
        #[arg(long)]
        all: bool,
        /// Cells per axis; by default the sweep entry closest to the published error.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time factorize + solve on ABD systems of growing size.
    BenchAbd {
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the surrogate; writes checkpoint.json and metrics.csv.
    Train {
        /// `heat`, `wave` or a dataset.json written by gen-data.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a toy dataset directory.
    GenData {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a CSV next to every trajectory file.
        #[arg(long)]
        csv: bool,
    },
}

/// Keys accepted in a `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub all: Option<bool>,
    pub sizes: Option<Vec<usize>>,
    pub dataset: Option<String>,
    pub variant: Option<String>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub hidden: Option<usize>,
    pub out: Option<PathBuf>,
    pub csv: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| invalid(format!("{}: {}", path.display(), e.message())))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

/// Installs the global worker pool from `SPLINECOLLOC_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| invalid(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    if n == 0 {
        return Err(invalid(format!("{THREADS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| invalid(e.to_string()))
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::OscDemo { problem, n, r, out } => {
            let problem = problem.or(file.problem).unwrap_or_else(|| "a3".into());
            let default_r = if problem == "poly-exact" { 4 } else { 3 };
            osc_demo(&problem, n.or(file.n).unwrap_or(3), r.or(file.r).unwrap_or(default_r), out.or(file.out).as_deref())
        }
        Command::Compare { problem, all, n, out } => {
            let all = all || file.all.unwrap_or(false);
            let problems: Vec<String> = match (problem.or(file.problem), all) {
                (_, true) => ANALYTIC_NAMES.iter().map(|s| s.to_string()).collect(),
                (Some(p), false) => vec![p],
                (None, false) => return Err(invalid("compare needs --problem or --all")),
            };
            compare(&problems, n.or(file.n), out.or(file.out).as_deref())
        }
        Command::BenchAbd { sizes, seed, out } => {
            let sizes = sizes.or(file.sizes).unwrap_or_else(|| vec![256, 512, 1024, 2048, 4096]);
            bench_abd(&sizes, seed.or(file.seed).unwrap_or(0), out.or(file.out).as_deref())
        }
        Command::Train { dataset, variant, epochs, seed, batch_size, hidden, out } => {
            let defaults = TrainConfig::default();
            let variant: Variant = match variant.or(file.variant) {
                Some(v) => v.parse()?,
                None => defaults.variant,
            };
            let cfg = TrainConfig {
                variant,
                epochs: epochs.or(file.epochs).unwrap_or(defaults.epochs),
                seed: seed.or(file.seed).unwrap_or(defaults.seed),
                batch_size: batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
                hidden: hidden.or(file.hidden).unwrap_or(defaults.hidden),
                ..defaults
            };
            let dataset = dataset.or(file.dataset).ok_or_else(|| invalid("train needs --dataset"))?;
            let out = out.or(file.out).unwrap_or_else(|| PathBuf::from("run"));
            train_cmd(&dataset, &cfg, &out)
        }
        Command::GenData { dataset, seed, out, csv } => {
            let kind: ToyKind = dataset.or(file.dataset).ok_or_else(|| invalid("gen-data needs --dataset"))?.parse()?;
            let cfg = ToyConfig { seed: seed.or(file.seed).unwrap_or(0), ..ToyConfig::default() };
            let out = out.or(file.out).ok_or_else(|| invalid("gen-data needs --out"))?;
            gen_data(kind, &cfg, &out, csv || file.csv.unwrap_or(false))
        }
    }
}

fn osc_demo(problem: &str, n: usize, r: usize, out: Option<&Path>) -> Result<()> {
    if r < 2 {
        return Err(invalid(format!("--r must be at least 2 (got {r})")));
    }
    if n == 0 {
        return Err(invalid("--n must be at least 1"));
    }
    let (p, exact): (_, Box<dyn Fn(f64) -> f64>) = match problem {
        "a3" => (sine_ode_problem(n, r)?, Box::new(|x: f64| (2.0 * std::f64::consts::PI * x).sin())),
        "poly-exact" => {
            let c = poly_exact_coeffs(r);
            (poly_ode_problem(n, r)?, Box::new(move |x| monomial_eval(&c, x, 0)))
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    let sol = solve_osc1d(&p)?;
    let bp = sol.breakpoints();
    for (i, c) in sol.global_coeffs().iter().enumerate() {
        let terms: Vec<String> = c.iter().enumerate().map(|(j, v)| format!("{v:+.6}x^{j}")).collect();
        eprintln!("piece {i} [{:.6}, {:.6}]: {}", bp[i], bp[i + 1], terms.join(" "));
    }
    const SAMPLES: usize = 201;
    let mut csv = String::from("x,u_hat,u_exact\n");
    let mut max_err = 0.0f64;
    for k in 0..SAMPLES {
        let x = k as f64 / (SAMPLES - 1) as f64;
        let (u, e) = (sol.evaluate(x, 0)?, exact(x));
        max_err = max_err.max((u - e).abs());
        csv.push_str(&format!("{x:.6},{u:.12e},{e:.12e}\n"));
    }
    eprintln!("problem {problem} n={n} r={r}: max error {max_err:.6e}");
    emit(out, &csv)
}

fn compare(problems: &[String], n: Option<usize>, out: Option<&Path>) -> Result<()> {
    let mut csv = format!("{}\n", ErrorTable::csv_header());
    for p in problems {
        let table = match n {
            Some(n) => compare_methods(p, n)?,
            None => best_resolution(p)?,
        };
        eprintln!("{p}: cells {} ranking {}", table.cells, if table.ranking_holds() { "holds" } else { "violated" });
        csv.push_str(&table.to_csv_rows());
    }
    emit(out, &csv)
}

fn bench_abd(sizes: &[usize], seed: u64, out: Option<&Path>) -> Result<()> {
    let report = benchmark_scaling(sizes, BlockWidth::Sqrt, 0.2, seed)?;
    if let Some(e) = report.exponent {
        eprintln!("fitted exponent {e:.3}");
    }
    emit(out, &report.to_csv())
}

fn load_dataset(spec: &str) -> Result<Dataset> {
    match spec.parse::<ToyKind>() {
        Ok(kind) => Dataset::toy(kind, &ToyConfig::default()),
        Err(_) => {
            let path = Path::new(spec);
            if !path.is_file() {
                return Err(invalid(format!("dataset {spec:?} is neither heat, wave nor an existing dataset.json")));
            }
            Ok(Dataset::load(path)?.0)
        }
    }
}

fn train_cmd(dataset: &str, cfg: &TrainConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let ds = load_dataset(dataset)?;
    let outcome = train(&ds, cfg)?;
    fs::create_dir_all(out)?;
    Checkpoint::new(&outcome.params, cfg).save(out.join("checkpoint.json"))?;
    fs::write(out.join("metrics.csv"), metrics_csv(&outcome.metrics))?;
    let t = outcome.test;
    println!(
        "{}",
        serde_json::json!({
            "dataset": ds.name,
            "variant": cfg.variant.label(),
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "test": { "L": t.total, "L_s": t.sample, "L_i": t.interp },
        })
    );
    Ok(())
}

fn gen_data(kind: ToyKind, cfg: &ToyConfig, out: &Path, csv: bool) -> Result<()> {
    let ds = Dataset::toy(kind, cfg)?;
    fs::create_dir_all(out)?;
    let manifest = ds.save(out, cfg)?;
    if csv {
        for (split, trajs) in [("train", &ds.train), ("test", &ds.test)] {
            for (i, t) in trajs.iter().enumerate() {
                fs::write(out.join(format!("{split}_{i:03}.csv")), t.to_csv())?;
            }
        }
    }
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("splinecolloc").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn rejects_bad_order_and_unknown_problem() {
        assert!(run(parse(&["osc-demo", "--r", "1"])).is_err());
        assert!(matches!(run(parse(&["compare", "--problem", "3d-cubic"])), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn config_file_supplies_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        let out = dir.path().join("demo.csv");
        fs::write(&cfg, format!("problem = \"poly-exact\"\nr = 4\nout = {:?}\n", out)).unwrap();
        run(parse(&["--config", cfg.to_str().unwrap(), "osc-demo"])).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 202);
        fs::write(&cfg, "unknown_key = 1\n").unwrap();
        assert!(run(parse(&["--config", cfg.to_str().unwrap(), "osc-demo"])).is_err());
    }

    #[test]
    fn missing_dataset_file() {
        let err = run(parse(&["train", "--dataset", "/nonexistent/dataset.json", "--epochs", "1"])).unwrap_err();
        assert!(err.to_string().contains("dataset.json"));
    }
}
