//! Run manifests, verification suites, benchmarks and report files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupFile, GroupSpec};
use crate::kernels::{
    convolve, dirichlet_closed, dirichlet_multiple, dirichlet_power, fejer, fejer_expansion,
    fejer_power_closed, kernel_l1_profile, local_bound_profile, FejerPowerValue, KernelCache,
    KernelSweep,
};
use crate::spaces::generate_suite;
use crate::system::{fejer_mean, forward_fast, forward_naive, max_abs_diff, MeanSweep, Signal};
use crate::theorems::{
    build_counterexample, sigma_split_check, split_alphas, CounterexampleSpec, DivergenceCurve, Phi,
    SelectionCaps, SplitReport, Theorem1Report,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Pointwise identities between kernel tables.
    pub kernel: f64,
    /// Reconstructions that sum many terms.
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel: 1e-10,
            reconstruction: 1e-9,
        }
    }
}

impl Tolerances {
    /// A single user tolerance overrides both.
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            kernel: tol,
            reconstruction: tol,
        }
    }
}

/// Everything needed to rerun a command and get the same numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub group: GroupFile,
    pub params: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub tolerances: Tolerances,
    pub threads: usize,
}

/// A result together with the manifest that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report<T> {
    pub manifest: RunManifest,
    pub result: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub max_error: f64,
    pub scanned_count: u64,
    /// Measured constant, for checks that only require finiteness.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
}

impl CheckResult {
    fn bounded(name: &str, max_error: f64, tol: f64, scanned_count: u64) -> Self {
        CheckResult {
            name: name.into(),
            status: if max_error <= tol { Status::Pass } else { Status::Fail },
            max_error,
            scanned_count,
            value: None,
        }
    }

    fn finite(name: &str, value: f64, scanned_count: u64) -> Self {
        CheckResult {
            name: name.into(),
            status: if value.is_finite() { Status::Pass } else { Status::Fail },
            max_error: 0.0,
            scanned_count,
            value: Some(value),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Perturbs one brute-force Dirichlet value before comparison.
    pub corrupt_kernel: bool,
}

fn random_signal(spec: &GroupSpec, rng: &mut ChaCha8Rng) -> Signal {
    Signal::from_fn(spec, |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

#[derive(Default)]
struct Acc {
    err: f64,
    count: u64,
}

impl Acc {
    fn push(&mut self, e: f64) {
        self.err = self.err.max(e);
        self.count += 1;
    }
}

/// Exhaustive kernel-identity scans over every order and coset of `spec`.
pub fn lemma_checks(spec: &GroupSpec, opts: &CheckOptions) -> Result<Vec<CheckResult>> {
    let tol = opts.tolerances;
    let size = spec.size();
    let level = spec.level();
    let cache = KernelCache::new(4 * spec.radices().iter().map(|&m| m as usize).sum::<usize>() + 8);

    let mut at_zero = Acc::default();
    let mut indicator = Acc::default();
    let mut closed = Acc::default();
    let mut power = Acc::default();
    let mut multiple = Acc::default();
    let mut vanish = Acc::default();
    let mut expansion = Acc::default();

    // orders s M_j with 1 <= s < m_j, j < N
    let mut multiples: HashMap<usize, Vec<(u32, usize)>> = HashMap::new();
    for j in 0..level {
        for s in 1..spec.radix(j) {
            multiples
                .entry(s as usize * spec.power(j))
                .or_default()
                .push((s, j));
        }
    }

    // D_0 = 0 on the closed-form side
    for x in 0..size {
        closed.push(dirichlet_closed(spec, 0, x)?.norm());
    }
    let mut sweep = KernelSweep::new(spec);
    while let Some(n) = sweep.advance() {
        let d = sweep.dirichlet();
        at_zero.push((d[0] - Complex64::new(n as f64, 0.0)).norm());
        at_zero.push((sweep.fejer_at(0) - Complex64::new((n + 1) as f64 / 2.0, 0.0)).norm());

        if n < size {
            let corrupt = opts.corrupt_kernel && n == size / 2;
            for (x, v) in d.iter().enumerate() {
                let mut brute = *v;
                if corrupt && x == 0 {
                    brute += 1e-3;
                }
                closed.push((dirichlet_closed(spec, n, x)? - brute).norm());
            }
            let e = fejer_expansion(spec, n, &cache)?;
            expansion.push(max_abs_diff(&e.reconstruct(), sweep.fejer_sum()));
        }

        if let Some(j) = (0..=level).find(|&j| spec.power(j) == n) {
            for (x, v) in d.iter().enumerate() {
                indicator.push((v - Complex64::new(dirichlet_power(spec, j, x), 0.0)).norm());
            }
            if j >= 1 {
                for x in 0..size {
                    if let FejerPowerValue::Value(c) = fejer_power_closed(spec, j, x)? {
                        power.push((c - sweep.fejer_at(x)).norm());
                    }
                }
            }
        }

        if let Some(list) = multiples.get(&n) {
            for &(s, j) in list {
                let table = dirichlet_multiple(spec, s, j)?;
                multiple.push(max_abs_diff(table.values(), d));
                for x in 0..size {
                    let t = match spec.first_nonzero(x) {
                        Some(t) if t < j => t,
                        _ => continue,
                    };
                    let shifted = x - spec.digit(x, t) as usize * spec.power(t);
                    if !spec.same_prefix(shifted, 0, j) {
                        vanish.push(sweep.fejer_at(x).norm());
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut transform = Acc::default();
    let mut convolution = Acc::default();
    for _ in 0..3 {
        let f = random_signal(spec, &mut rng);
        transform.push(forward_naive(&f).max_abs_diff(&forward_fast(&f)));
        for n in 1..=size.min(64) {
            let k = fejer(spec, n)?;
            convolution.push(convolve(&f, &k)?.max_abs_diff(&fejer_mean(&f, n)?));
        }
    }

    let l1 = kernel_l1_profile(spec);
    let l1_sup = l1.iter().copied().fold(0.0, f64::max);
    let depth = (level / 2).max(1);
    let local = local_bound_profile(spec, depth)?;
    let local_sup = local.iter().copied().fold(0.0, f64::max);

    Ok(vec![
        CheckResult::bounded("transform_fast_vs_naive", transform.err, tol.reconstruction, transform.count),
        CheckResult::bounded("kernel_values_at_zero", at_zero.err, tol.kernel, at_zero.count),
        CheckResult::bounded("dirichlet_power_indicator", indicator.err, tol.kernel, indicator.count),
        CheckResult::bounded("dirichlet_closed_form", closed.err, tol.kernel, closed.count),
        CheckResult::bounded("fejer_power_closed_form", power.err, tol.kernel, power.count),
        CheckResult::bounded("fejer_digit_expansion", expansion.err, tol.reconstruction, expansion.count),
        CheckResult::bounded("dirichlet_multiple_product", multiple.err, tol.kernel, multiple.count),
        CheckResult::bounded("fejer_multiple_vanishing", vanish.err, tol.kernel, vanish.count),
        CheckResult::bounded("convolution_vs_weights", convolution.err, tol.reconstruction, convolution.count),
        CheckResult::finite("fejer_l1_sup", l1_sup, l1.len() as u64),
        CheckResult::finite("local_integral_ratio_sup", local_sup, local.len() as u64),
    ])
}

/// Vanishing of low-order means of random atoms, and on Walsh groups the
/// split of the counterexample means.
pub fn theorem_checks(spec: &GroupSpec, opts: &CheckOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    if spec.level() >= 2 {
        let mut vanish = Acc::default();
        for a in generate_suite(spec, 20, spec.level() - 1, 0.5, opts.seed)? {
            let atom = a.realize(spec)?;
            let spectrum = forward_fast(&atom.signal);
            let mut sweep = MeanSweep::new(&spectrum);
            while let Some(n) = sweep.advance() {
                if n > spec.power(atom.support.depth) {
                    break;
                }
                vanish.push(sweep.mean().iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
        out.push(CheckResult::bounded(
            "atom_low_means_vanish",
            vanish.err,
            opts.tolerances.kernel,
            vanish.count,
        ));
    }
    if spec.is_walsh() && spec.level() >= 4 {
        let ce = build_counterexample(
            spec,
            &CounterexampleSpec {
                p: 0.25,
                phi: Phi::Pow(0.75),
                level_cap: spec.level(),
                caps: SelectionCaps::default(),
            },
        )?;
        let alphas = split_alphas(&ce);
        let split = sigma_split_check(&ce, &alphas, opts.tolerances.reconstruction)?;
        let worst = split
            .max_first
            .max(split.max_second_complete)
            .max(split.max_split_error);
        out.push(CheckResult {
            name: "counterexample_mean_split".into(),
            status: if split.passes() { Status::Pass } else { Status::Fail },
            max_error: worst,
            scanned_count: (split.alphas * split.points) as u64,
            value: Some(split.min_tail_ratio),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub group: GroupFile,
    pub all_pass: bool,
    pub checks: Vec<CheckResult>,
}

/// Runs [`lemma_checks`] on the deepest truncation of `spec` with at most
/// `max_m` cosets.
pub fn run_verify_all(spec: &GroupSpec, max_m: usize, opts: &CheckOptions) -> Result<VerifySummary> {
    let level = (0..=spec.level())
        .rev()
        .find(|&n| spec.power(n) <= max_m)
        .unwrap_or(0);
    if level == 0 {
        return Err(Error::Config(format!("max M = {max_m} leaves an empty group")));
    }
    let spec = spec.truncate(level)?;
    let mut checks = lemma_checks(&spec, opts)?;
    checks.extend(theorem_checks(&spec, opts)?);
    Ok(VerifySummary {
        group: GroupFile::from(&spec),
        all_pass: checks.iter().all(CheckResult::passed),
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub size: usize,
    pub naive_seconds: f64,
    pub fast_seconds: f64,
    pub speedup: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub repetitions: usize,
    pub radices: Vec<u32>,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Fast path beats the naive one at the largest size.
    pub fn fast_wins(&self) -> bool {
        self.rows
            .last()
            .map(|r| r.fast_seconds < r.naive_seconds)
            .unwrap_or(false)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Times both transforms on the shallowest truncations of the periodic
/// extension of `radices` whose order reaches each of `sizes`.
pub fn run_bench(radices: &[u32], sizes: &[usize], repetitions: usize, seed: u64) -> Result<BenchReport> {
    if repetitions < 3 {
        return Err(Error::Config(format!(
            "benchmark needs at least 3 repetitions, got {repetitions}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &target in sizes {
        let mut level = 0;
        let mut order = 1usize;
        while order < target {
            order *= radices[level % radices.len()] as usize;
            level += 1;
        }
        let spec = GroupSpec::cyclic(radices, level)?;
        let f = random_signal(&spec, &mut rng);
        let mut naive = Vec::with_capacity(repetitions);
        let mut fast = Vec::with_capacity(repetitions);
        let mut deviation = 0.0f64;
        for _ in 0..repetitions {
            let start = Instant::now();
            let a = forward_naive(&f);
            naive.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            let b = forward_fast(&f);
            fast.push(start.elapsed().as_secs_f64());
            deviation = deviation.max(a.max_abs_diff(&b));
        }
        let (naive, fast) = (median(naive), median(fast));
        rows.push(BenchRow {
            size: spec.size(),
            naive_seconds: naive,
            fast_seconds: fast,
            speedup: naive / fast.max(f64::MIN_POSITIVE),
            max_deviation: deviation,
        });
    }
    Ok(BenchReport {
        repetitions,
        radices: radices.to_vec(),
        rows,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Curve rows of every atom: `n,term,partial_sum,value,atom`.
pub fn write_theorem1_csv(path: &Path, report: &Theorem1Report) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["n", "term", "partial_sum", "value", "atom"])?;
    for (atom, curve) in report.curves.iter().enumerate() {
        for row in curve {
            w.write_record([
                row.n.to_string(),
                row.term.to_string(),
                row.partial_sum.to_string(),
                row.value.to_string(),
                atom.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Divergence curve: `n,term,partial_sum,block_id`, empty id outside blocks.
pub fn write_theorem2_csv(path: &Path, curve: &DivergenceCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["n", "term", "partial_sum", "block_id"])?;
    for row in &curve.rows {
        w.write_record([
            row.n.to_string(),
            row.term.to_string(),
            row.partial_sum.to_string(),
            row.block_id.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Summary {
    pub p: f64,
    pub phi: String,
    pub level_cap: usize,
    pub orders: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub weights: Vec<f64>,
    pub selection_total: f64,
    pub coefficient_error: f64,
    pub decomposition_error: f64,
    pub split: SplitReport,
    pub blocks: Vec<crate::theorems::BlockIncrement>,
    pub increments_increase: bool,
    pub final_sum: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_suite_passes_on_small_groups() {
        for spec in [
            GroupSpec::walsh(6).unwrap(),
            GroupSpec::cyclic(&[2, 3, 4], 4).unwrap(),
            GroupSpec::cyclic(&[3], 4).unwrap(),
        ] {
            for c in lemma_checks(&spec, &CheckOptions::default()).unwrap() {
                assert!(c.passed(), "{c:?}");
                assert!(c.scanned_count > 0, "{c:?}");
            }
        }
    }

    #[test]
    fn corruption_fails_named_check() {
        let spec = GroupSpec::walsh(5).unwrap();
        let opts = CheckOptions {
            corrupt_kernel: true,
            ..Default::default()
        };
        let summary = run_verify_all(&spec, 1 << 10, &opts).unwrap();
        assert!(!summary.all_pass);
        let failed: Vec<_> = summary.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["dirichlet_closed_form"]);
        let names: Vec<_> = summary.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"counterexample_mean_split"));
    }

    #[test]
    fn verify_all_truncates() {
        let spec = GroupSpec::walsh(9).unwrap();
        let s = run_verify_all(&spec, 100, &CheckOptions::default()).unwrap();
        assert_eq!(s.group.level, 6);
        assert!(s.all_pass);
        assert!(run_verify_all(&spec, 1, &CheckOptions::default()).is_err());
    }

    #[test]
    fn bench_rules() {
        assert!(matches!(run_bench(&[2], &[64], 1, 0), Err(Error::Config(_))));
        let r = run_bench(&[2, 3], &[36, 100], 3, 0).unwrap();
        assert_eq!(r.rows[0].size, 36);
        assert_eq!(r.rows[1].size, 216);
        assert!(r.rows.iter().all(|row| row.max_deviation < 1e-9));
    }
}
