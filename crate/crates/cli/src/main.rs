use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use daubloc::cantor;
use daubloc::experiments::{self, CantorSweep, Grid};
use daubloc::io::{fmt17, to_json, Sig17};
use daubloc::verify::{self, Suite};
use daubloc::{CantorSpec, IntervalUnion, Method};

/// Eigenvalues and operator norms of Gaussian-window localization operators
/// with radial characteristic weights.
///
/// Interval lists are flat pairs `a1,b1,a2,b2,...` in the profile domain
/// (values of r²); the eigenvalue integrals run over π times these sets.
#[derive(Debug, Parser)]
#[command(name = "daubloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Convergence tolerance for truncated series, in (0, 1e-3].
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output file; for sweeps an existing directory receives
    /// `ring.csv`, `comb.csv` or `cantor.csv` (`.json` with JSON output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Evaluate eigenvalues with the adaptive quadrature oracle.
    #[arg(long, global = true, hide = true)]
    oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues λ_0..λ_K of a finite interval union.
    Spectrum {
        #[arg(long, value_delimiter = ',', required = true)]
        intervals: Vec<f64>,
        /// Largest index; chosen from the tail certificate when omitted.
        #[arg(long)]
        kmax: Option<u64>,
    },
    /// Operator norm of an interval union or a Cantor iterate.
    Norm(NormArgs),
    /// Norms of unit-area rings over a log grid of πR².
    Ring {
        #[arg(long = "piR2-grid", value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Space the grid linearly instead of logarithmically.
        #[arg(long)]
        linear: bool,
    },
    /// Norms of the equidistant comb E(s) over a linear grid of s.
    Comb {
        #[arg(long = "s-grid", value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
    /// Cantor iterate sweep, or a single (n, πR²) point.
    Cantor(CantorArgs),
    /// Run property suites; exits with 2 when an invariant fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct NormArgs {
    #[arg(long, value_delimiter = ',')]
    intervals: Option<Vec<f64>>,
    /// `L,n`: the iterate C_n(L) in the profile domain.
    #[arg(long, value_delimiter = ',')]
    cantor: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct CantorArgs {
    #[arg(long, requires = "per_n", conflicts_with_all = ["n", "pi_r2"])]
    nmax: Option<u32>,
    /// Log-spaced πR² values per iterate.
    #[arg(long, requires = "nmax")]
    per_n: Option<usize>,
    /// Add the rows πR² = c·3^{n/2}.
    #[arg(long, requires = "nmax")]
    fup: bool,
    /// Proportionality constant c of the FUP rows.
    #[arg(long, default_value_t = 1.0, requires = "fup")]
    fup_const: f64,
    #[arg(long, requires = "pi_r2")]
    n: Option<u32>,
    #[arg(long = "piR2", requires = "n")]
    pi_r2: Option<f64>,
    /// Only the closed-form λ_0 of the single point.
    #[arg(long, requires = "n")]
    lambda0_only: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DAUBLOC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("DAUBLOC_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if !(cli.tol > 0.0 && cli.tol <= 1e-3) {
        bail!("--tol must lie in (0, 1e-3], got {}", cli.tol);
    }
    configure_threads()?;
    let method = if cli.oracle {
        Method::Oracle
    } else {
        Method::Sweep
    };
    let out = Output {
        format: cli.format,
        path: cli.out.as_deref(),
    };
    match cli.command {
        Command::Spectrum { intervals, kmax } => {
            if let Some(k) = kmax {
                if k > daubloc::gamma::MAX_INDEX {
                    bail!(
                        "--kmax must be at most {}, got {k}",
                        daubloc::gamma::MAX_INDEX
                    );
                }
            }
            let set = parse_intervals(&intervals)?;
            let spec = daubloc::spectrum::spectrum_with(&set, kmax, method)?;
            out.emit(None, &spec, || spec.to_csv())?;
        }
        Command::Norm(args) => {
            let set = match (args.intervals, args.cantor) {
                (Some(list), _) => parse_intervals(&list)?,
                (None, Some(spec)) => parse_cantor(&spec)?,
                (None, None) => unreachable!("clap requires one of the group"),
            };
            let norm = daubloc::spectrum::operator_norm_with(&set, method)?;
            out.emit(None, &norm, || norm.to_csv())?;
        }
        Command::Ring { grid, linear } => {
            let (min, max, count) = parse_grid("--piR2-grid", &grid)?;
            let grid = if linear {
                Grid::linear(min, max, count)
            } else {
                Grid::log(min, max, count)
            };
            let report = experiments::run_ring(&grid.points()?)?;
            out.emit(Some("ring"), &report, || report.to_csv())?;
        }
        Command::Comb { grid } => {
            let (min, max, count) = parse_grid("--s-grid", &grid)?;
            let report = experiments::run_comb(&Grid::linear(min, max, count).points()?, cli.tol)?;
            out.emit(Some("comb"), &report, || report.to_csv())?;
        }
        Command::Cantor(args) => run_cantor(args, &out)?,
        Command::Verify { suite } => return run_verify(&suite, &out),
    }
    Ok(ExitCode::SUCCESS)
}

struct Output<'a> {
    format: Format,
    path: Option<&'a Path>,
}

impl Output<'_> {
    /// Writes JSON or CSV to the chosen destination. `stem` names the file
    /// when the destination is a directory.
    fn emit<T: Serialize>(
        &self,
        stem: Option<&str>,
        value: &T,
        csv: impl FnOnce() -> String,
    ) -> Result<()> {
        let (text, ext) = match self.format {
            Format::Json => (to_json(value)?, "json"),
            Format::Csv => (csv(), "csv"),
        };
        match self.path {
            None => print!("{text}"),
            Some(path) => {
                let target = match stem {
                    Some(stem) if path.is_dir() => path.join(format!("{stem}.{ext}")),
                    _ => path.to_path_buf(),
                };
                fs::write(&target, text)
                    .with_context(|| format!("writing {}", target.display()))?;
            }
        }
        Ok(())
    }
}

fn parse_intervals(flat: &[f64]) -> Result<IntervalUnion> {
    if !flat.len().is_multiple_of(2) {
        bail!(
            "--intervals needs an even number of values (a1,b1,a2,b2,...), got {}",
            flat.len()
        );
    }
    let pairs: Vec<(f64, f64)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    Ok(IntervalUnion::new(&pairs)?)
}

fn parse_cantor(spec: &[f64]) -> Result<IntervalUnion> {
    let [l, n] = spec else {
        bail!("--cantor takes L,n");
    };
    if !(n.fract() == 0.0 && *n >= 0.0 && *n <= u32::MAX as f64) {
        bail!("Cantor iterate must be a nonnegative integer, got {n}");
    }
    Ok(CantorSpec::new(*l, *n as u32)?.expand()?)
}

fn parse_grid(flag: &str, values: &[f64]) -> Result<(f64, f64, usize)> {
    let [min, max, count] = values else {
        bail!("{flag} takes min,max,count");
    };
    if !(count.fract() == 0.0 && *count >= 1.0) {
        bail!("{flag}: count must be a positive integer, got {count}");
    }
    Ok((*min, *max, *count as usize))
}

#[derive(Serialize)]
struct Lambda0Point {
    n: u32,
    #[serde(rename = "piR2")]
    pi_r2: Sig17,
    lambda0: Sig17,
}

#[derive(Serialize)]
struct CantorPoint {
    n: u32,
    #[serde(rename = "piR2")]
    pi_r2: Sig17,
    lambda0: Sig17,
    norm: Sig17,
    ratio_thm4: Option<Sig17>,
    argmax_k: usize,
    tail_bound: Sig17,
}

fn run_cantor(args: CantorArgs, out: &Output) -> Result<()> {
    if let Some(n_max) = args.nmax {
        let sweep = CantorSweep {
            n_max,
            x_per_n: args.per_n.expect("clap enforces --per-n"),
            fup_constant: args.fup.then_some(args.fup_const),
        };
        let report = experiments::run_cantor(&sweep)?;
        return out.emit(Some("cantor"), &report, || report.to_csv());
    }
    let (Some(n), Some(x)) = (args.n, args.pi_r2) else {
        bail!("cantor needs either --nmax N --per-n M or --n N --piR2 X");
    };
    if args.lambda0_only {
        let lambda0 = cantor::lambda0_closed(x, n)?;
        let point = Lambda0Point {
            n,
            pi_r2: Sig17(x),
            lambda0: Sig17(lambda0),
        };
        return out.emit(None, &point, || {
            format!("n,piR2,lambda0\n{n},{},{}\n", fmt17(x), fmt17(lambda0))
        });
    }
    let row = experiments::cantor_row(n, x)?;
    let point = CantorPoint {
        n,
        pi_r2: Sig17(x),
        lambda0: Sig17(row.lambda0),
        norm: Sig17(row.norm),
        ratio_thm4: row.ratio_thm4.map(Sig17),
        argmax_k: row.argmax_k,
        tail_bound: Sig17(row.tail_bound),
    };
    out.emit(None, &point, || {
        format!(
            "n,piR2,lambda0,norm,ratio_thm4,argmax_k,tail_bound\n{n},{},{},{},{},{},{}\n",
            fmt17(x),
            fmt17(row.lambda0),
            fmt17(row.norm),
            row.ratio_thm4.map(fmt17).unwrap_or_default(),
            row.argmax_k,
            fmt17(row.tail_bound)
        )
    })
}

fn run_verify(suite: &str, out: &Output) -> Result<ExitCode> {
    let suites = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse::<Suite>()?]
    };
    let reports = verify::run(&suites)?;
    out.emit(None, &reports, || {
        let mut text = String::from("suite,property,checks,violations\n");
        for r in &reports {
            for p in &r.properties {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    r.suite, p.property, p.checks, p.violations
                ));
            }
        }
        text
    })?;
    for r in &reports {
        eprintln!(
            "{}: {} checks, {} violations",
            r.suite,
            r.checks,
            r.violation_count()
        );
        for line in &r.violations {
            eprintln!("  {line}");
        }
    }
    let failed = reports.iter().any(|r| !r.passed());
    Ok(if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
