use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use vilenkin::error::{Error, Result};
use vilenkin::group::{load_group, GroupFile, GroupSpec};
use vilenkin::kernels::{dirichlet, fejer};
use vilenkin::report::{
    lemma_checks, run_bench, run_verify_all, write_json, write_theorem1_csv, write_theorem2_csv,
    CheckOptions, Report, RunManifest, Theorem2Summary, Tolerances, VerifySummary, VERSION,
};
use vilenkin::spaces::{generate_suite, verify_decomposition, AtomSpec};
use vilenkin::system::{forward_fast, forward_naive, inverse, inverse_naive, Signal, Spectrum};
use vilenkin::theorems::{
    build_counterexample, divergence_sum, sigma_split_check, split_alphas, theorem1_suite,
    CounterexampleSpec, Phi, SelectionCaps,
};

#[derive(Parser)]
#[command(name = "vilenkin", version, about = "Fourier analysis on bounded Vilenkin groups")]
struct Cli {
    /// Group: JSON file {"m": [...], "N": n}, or inline "2,3,4" / "2^10"
    #[arg(long, global = true, default_value = "2^8")]
    group: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 lets the pool decide
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Overrides every numeric tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Timestamp recorded in the manifest, seconds since the epoch
    #[arg(long, global = true)]
    timestamp: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize, Deserialize, Clone)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
enum Command {
    /// Vilenkin-Fourier transform of a signal CSV (index,re,im)
    Transform(TransformArgs),
    /// Dump a Dirichlet or Fejer kernel table
    Kernels(KernelArgs),
    /// Exhaustive kernel identity scans
    VerifyLemmas(VerifyArgs),
    /// Strong summability sums over an atom suite
    Theorem1(Theorem1Args),
    /// Counterexample construction and divergence curve
    Theorem2(Theorem2Args),
    /// Naive versus fast transform timing
    Bench(BenchArgs),
    /// Kernel scans plus theorem-level checks
    VerifyAll(VerifyArgs),
    /// Re-executes a report from its embedded manifest
    #[serde(skip)]
    Rerun { report: PathBuf },
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct TransformArgs {
    #[arg(long, visible_alias = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    inverse: bool,
    /// Use the quadratic direct transform
    #[arg(long)]
    naive: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
enum Dump {
    #[value(name = "D")]
    D,
    #[value(name = "K")]
    K,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct KernelArgs {
    #[arg(long, value_enum, ignore_case = true)]
    dump: Dump,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct VerifyArgs {
    #[arg(long = "max-M", alias = "max-m", default_value_t = 1024)]
    max_m: usize,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, hide = true)]
    #[serde(default)]
    corrupt_kernel: bool,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct Theorem1Args {
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Atom suite JSON; generated from the seed when absent
    #[arg(long)]
    atoms: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct Theorem2Args {
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    #[arg(long, default_value = "pow:0.75")]
    phi: String,
    /// Level cap; defaults to the group level
    #[arg(long = "A")]
    a: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Sum over every index instead of A_02 only
    #[arg(long)]
    unrestricted: bool,
    #[arg(long, default_value_t = 1.0)]
    summand_cap: f64,
    #[arg(long, default_value_t = 8.0)]
    total_cap: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct BenchArgs {
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 1024, 4096])]
    sizes: Vec<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

struct Context {
    spec: GroupSpec,
    seed: u64,
    tolerances: Tolerances,
    threads: usize,
    timestamp: u64,
}

impl Context {
    fn manifest(&self, command: &Command) -> Result<RunManifest> {
        let mut tagged = serde_json::to_value(command)?;
        let name = tagged["command"].as_str().unwrap_or_default().to_string();
        Ok(RunManifest {
            command: name,
            group: GroupFile::from(&self.spec),
            params: tagged["params"].take(),
            seed: self.seed,
            version: VERSION.into(),
            timestamp: self.timestamp,
            tolerances: self.tolerances,
            threads: self.threads,
        })
    }
}

fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.with_file_name(name)
}

fn verify(ctx: &Context, command: &Command, args: &VerifyArgs, full: bool) -> Result<bool> {
    let opts = CheckOptions {
        tolerances: ctx.tolerances,
        seed: ctx.seed,
        corrupt_kernel: args.corrupt_kernel,
    };
    let summary = if full {
        run_verify_all(&ctx.spec, args.max_m, &opts)?
    } else {
        if ctx.spec.size() > args.max_m {
            return Err(Error::Config(format!(
                "group order {} exceeds max M = {}",
                ctx.spec.size(),
                args.max_m
            )));
        }
        let checks = lemma_checks(&ctx.spec, &opts)?;
        VerifySummary {
            group: GroupFile::from(&ctx.spec),
            all_pass: checks.iter().all(|c| c.passed()),
            checks,
        }
    };
    for c in &summary.checks {
        eprintln!(
            "{:<28} {:?} max_error={:e} scanned={}",
            c.name, c.status, c.max_error, c.scanned_count
        );
    }
    let pass = summary.all_pass;
    emit(
        args.report.as_deref(),
        &Report {
            manifest: ctx.manifest(command)?,
            result: summary,
        },
    )?;
    Ok(pass)
}

fn run(ctx: &Context, command: &Command) -> Result<bool> {
    let spec = &ctx.spec;
    match command {
        Command::Transform(a) => {
            if a.inverse {
                let s = Spectrum::read_csv(spec, &a.input)?;
                let f = if a.naive { inverse_naive(&s) } else { inverse(&s) };
                f.write_csv(&a.out)?;
            } else {
                let f = Signal::read_csv(spec, &a.input)?;
                let s = if a.naive { forward_naive(&f) } else { forward_fast(&f) };
                s.write_csv(&a.out)?;
            }
            Ok(true)
        }
        Command::Kernels(a) => {
            let table = match a.dump {
                Dump::D => dirichlet(spec, a.n)?,
                Dump::K => fejer(spec, a.n)?,
            };
            table.signal.write_csv(&a.out)?;
            Ok(true)
        }
        Command::VerifyLemmas(a) => verify(ctx, command, a, false),
        Command::VerifyAll(a) => verify(ctx, command, a, true),
        Command::Theorem1(a) => {
            let suite: Vec<AtomSpec> = match &a.atoms {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => generate_suite(spec, a.count, spec.level().saturating_sub(2).max(1), a.p, ctx.seed)?,
            };
            let n_max = a.nmax.unwrap_or(spec.size());
            let report = theorem1_suite(spec, &suite, a.p, n_max)?;
            eprintln!(
                "p={} atoms={} sup T={} measured constant={}",
                a.p,
                report.atoms.len(),
                report.sup,
                report.constant
            );
            if let Some(out) = &a.out {
                write_theorem1_csv(out, &report)?;
            }
            emit(
                a.out.as_ref().map(|o| o.with_extension("json")).as_deref(),
                &Report {
                    manifest: ctx.manifest(command)?,
                    result: &report,
                },
            )?;
            Ok(report.sup.is_finite())
        }
        Command::Theorem2(a) => {
            let phi: Phi = a.phi.parse()?;
            let cs = CounterexampleSpec {
                p: a.p,
                phi,
                level_cap: a.a.unwrap_or(spec.level()),
                caps: SelectionCaps {
                    summand: a.summand_cap,
                    total: a.total_cap,
                },
            };
            let ce = build_counterexample(spec, &cs)?;
            let decomposition = verify_decomposition(&ce.martingale, &ce.weights, &ce.atoms, ce.p)?;
            let split = sigma_split_check(&ce, &split_alphas(&ce), ctx.tolerances.reconstruction)?;
            let curve = divergence_sum(&ce, a.nmax.unwrap_or(spec.size()), !a.unrestricted)?;
            let summary = Theorem2Summary {
                p: a.p,
                phi: phi.to_string(),
                level_cap: cs.level_cap,
                orders: ce.selection.orders.clone(),
                coefficients: ce.coefficients.clone(),
                weights: ce.weights.clone(),
                selection_total: ce.selection.total,
                coefficient_error: ce.coefficient_error(),
                decomposition_error: decomposition.max_level_error / decomposition.scale.max(1.0),
                split,
                increments_increase: curve.increments_increase(),
                final_sum: curve.final_sum(),
                blocks: curve.blocks.clone(),
            };
            eprintln!(
                "blocks={} split violations={} final sum={}",
                summary.orders.len(),
                summary.split.violations,
                summary.final_sum
            );
            let pass = summary.split.passes()
                && summary.coefficient_error <= ctx.tolerances.reconstruction
                && summary.decomposition_error <= ctx.tolerances.reconstruction;
            if let Some(out) = &a.out {
                write_theorem2_csv(out, &curve)?;
            }
            emit(
                a.out.as_ref().map(|o| sibling(o, "blocks.json")).as_deref(),
                &Report {
                    manifest: ctx.manifest(command)?,
                    result: summary,
                },
            )?;
            Ok(pass)
        }
        Command::Bench(a) => {
            let report = run_bench(spec.radices(), &a.sizes, a.reps, ctx.seed)?;
            for r in &report.rows {
                eprintln!(
                    "M={:<6} naive={:.3e}s fast={:.3e}s speedup={:.1} deviation={:e}",
                    r.size, r.naive_seconds, r.fast_seconds, r.speedup, r.max_deviation
                );
            }
            let pass = report.fast_wins() && report.rows.iter().all(|r| r.max_deviation <= 1e-9);
            emit(
                a.report.as_deref(),
                &Report {
                    manifest: ctx.manifest(command)?,
                    result: report,
                },
            )?;
            Ok(pass)
        }
        Command::Rerun { .. } => unreachable!(),
    }
}

fn from_manifest(path: &Path) -> Result<(Context, Command)> {
    #[derive(Deserialize)]
    struct Envelope {
        manifest: RunManifest,
    }
    let text = std::fs::read_to_string(path)?;
    let m = serde_json::from_str::<Envelope>(&text)?.manifest;
    let command: Command = serde_json::from_value(serde_json::json!({
        "command": m.command,
        "params": m.params,
    }))?;
    let ctx = Context {
        spec: m.group.build()?,
        seed: m.seed,
        tolerances: m.tolerances,
        threads: m.threads,
        timestamp: m.timestamp,
    };
    Ok((ctx, command))
}

fn setup(cli: Cli) -> Result<(Context, Command)> {
    if let Command::Rerun { report } = &cli.command {
        return from_manifest(report);
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {t}")));
        }
    }
    let timestamp = cli.timestamp.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let ctx = Context {
        spec: load_group(&cli.group)?,
        seed: cli.seed,
        tolerances: cli.tol.map(Tolerances::uniform).unwrap_or_default(),
        threads: cli.threads,
        timestamp,
    };
    Ok((ctx, cli.command))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut ctx, command) = match setup(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if ctx.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    ctx.threads = rayon::current_num_threads();
    match run(&ctx, &command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
