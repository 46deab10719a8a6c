//! Strong-summability sums for `H_p`, their failure below `p = 1/2`
//! with weak norms, and the counterexample martingale behind it.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::kernels::dirichlet_power;
use crate::spaces::{
    hp_power, lp_power_slice, weak_lp_power, Atom, AtomSpec, Interval, MartingaleSeq,
};
use crate::system::{forward_fast, Characters, MeanSweep, Signal, Spectrum};

/// `[1/2 + p]`.
pub fn log_exponent(p: f64) -> i32 {
    (0.5 + p).floor() as i32
}

fn check_theorem1_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

fn check_curve_end(spec: &GroupSpec, n: usize) -> Result<()> {
    if n < 2 || n > spec.size() {
        Err(Error::OutOfRange {
            what: "n",
            value: n,
            limit: spec.size(),
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    pub term: f64,
    pub partial_sum: f64,
    /// The partial sum after normalization by the log factor.
    pub value: f64,
}

/// Rows `n = 1..=n_max` of
/// `T(n) = log^{-[1/2+p]}(n) sum_{k<=n} ||sigma_k f||_p^p / k^{2-2p}`.
/// The row for `n = 1` carries no normalized value (`log 1 = 0`) and is
/// reported as `NaN` only when the log factor is present.
pub fn theorem1_curve(f: &Signal, p: f64, n_max: usize) -> Result<Vec<CurveRow>> {
    check_theorem1_exponent(p)?;
    check_curve_end(f.spec(), n_max)?;
    let e = log_exponent(p);
    let spectrum = forward_fast(f);
    let mut sweep = MeanSweep::new(&spectrum);
    let mut rows = Vec::with_capacity(n_max);
    let mut partial = 0.0;
    while let Some(k) = sweep.advance() {
        let term = lp_power_slice(sweep.mean(), p) / (k as f64).powf(2.0 - 2.0 * p);
        partial += term;
        let value = if e == 0 {
            partial
        } else if k == 1 {
            f64::NAN
        } else {
            partial / (k as f64).ln().powi(e)
        };
        rows.push(CurveRow {
            n: k,
            term,
            partial_sum: partial,
            value,
        });
        if k == n_max {
            break;
        }
    }
    Ok(rows)
}

pub fn theorem1_sum(f: &Signal, p: f64, n: usize) -> Result<f64> {
    Ok(theorem1_curve(f, p, n)?.last().unwrap().value)
}

/// `sup_{2 <= n <= n_max} T(n)`.
pub fn curve_sup(rows: &[CurveRow]) -> f64 {
    rows.iter()
        .filter(|r| r.n >= 2)
        .map(|r| r.value)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSummary {
    pub index: usize,
    pub depth: usize,
    /// `sup_n T(a, p, n)`.
    pub sup: f64,
    /// `||a||_{H_p}^p`.
    pub hp_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub p: f64,
    pub n_max: usize,
    pub log_exponent: i32,
    pub log_base: String,
    pub atoms: Vec<AtomSummary>,
    /// Sup of `T` over the suite and over `2 <= n <= n_max`.
    pub sup: f64,
    /// Sup over the suite of `sup_n T(a) / ||a||_{H_p}^p`.
    pub constant: f64,
    #[serde(skip)]
    pub curves: Vec<Vec<CurveRow>>,
}

/// Runs the strong-summability sum over every atom of a suite, in parallel.
pub fn theorem1_suite(
    spec: &GroupSpec,
    suite: &[AtomSpec],
    p: f64,
    n_max: usize,
) -> Result<Theorem1Report> {
    check_theorem1_exponent(p)?;
    check_curve_end(spec, n_max)?;
    let results: Vec<(AtomSummary, Vec<CurveRow>)> = suite
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let atom = AtomSpec { p, ..s.clone() }.realize(spec)?;
            let curve = theorem1_curve(&atom.signal, p, n_max)?;
            let hp = hp_power(&MartingaleSeq::from_signal(&atom.signal), p)?;
            Ok((
                AtomSummary {
                    index,
                    depth: s.depth,
                    sup: curve_sup(&curve),
                    hp_power: hp,
                },
                curve,
            ))
        })
        .collect::<Result<_>>()?;
    let (atoms, curves): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let sup = atoms.iter().map(|a| a.sup).fold(0.0, f64::max);
    let constant = atoms.iter().map(|a| a.sup / a.hp_power).fold(0.0, f64::max);
    Ok(Theorem1Report {
        p,
        n_max,
        log_exponent: log_exponent(p),
        log_base: "e".into(),
        atoms,
        sup,
        constant,
        curves,
    })
}

/// `(1/log n) sum_{k<=n} ||sigma_k f - f||_{1/2}^{1/2} / k` for
/// `n = 2..=n_max`; entry `i` is for `n = i + 2`.
pub fn corollary_curve(f: &Signal, n_max: usize) -> Result<Vec<f64>> {
    check_curve_end(f.spec(), n_max)?;
    let spectrum = forward_fast(f);
    let mut sweep = MeanSweep::new(&spectrum);
    let mut out = Vec::with_capacity(n_max - 1);
    let mut partial = 0.0;
    let mut diff = Vec::with_capacity(f.len());
    while let Some(k) = sweep.advance() {
        diff.clear();
        diff.extend(sweep.mean().iter().zip(f.values()).map(|(s, v)| s - v));
        partial += lp_power_slice(&diff, 0.5) / k as f64;
        if k >= 2 {
            out.push(partial / (k as f64).ln());
        }
        if k == n_max {
            break;
        }
    }
    Ok(out)
}

pub fn corollary_sum(f: &Signal, n: usize) -> Result<f64> {
    Ok(*corollary_curve(f, n)?.last().unwrap())
}

/// `n` has digits `n_0 = 1`, `n_1 = 0`, `n_2 = 1`; higher digits are free.
pub fn in_a02(spec: &GroupSpec, n: usize) -> bool {
    spec.level() >= 3
        && n < spec.size()
        && spec.digit(n, 0) == 1
        && spec.digit(n, 1) == 0
        && spec.digit(n, 2) == 1
}

/// Weight function in the divergent sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    /// `n^a`
    Pow(f64),
    /// `1 + ln n`
    Log,
    /// `c`
    Const(f64),
}

impl Phi {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            Phi::Pow(a) => n.powf(a),
            Phi::Log => 1.0 + n.ln(),
            Phi::Const(c) => c,
        }
    }
}

impl FromStr for Phi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse weight function {s:?}"));
        let phi = if s == "log" {
            Phi::Log
        } else if let Some(a) = s.strip_prefix("pow:") {
            Phi::Pow(a.trim().parse().map_err(|_| bad())?)
        } else if let Some(c) = s.strip_prefix("const:") {
            Phi::Const(c.trim().parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        match phi {
            Phi::Pow(a) if !(a >= 0.0 && a.is_finite()) => Err(Error::Config(format!(
                "exponent in {s:?} must be finite and nonnegative"
            ))),
            Phi::Const(c) if !(c >= 1.0 && c.is_finite()) => {
                Err(Error::Config(format!("constant in {s:?} must be at least 1")))
            }
            _ => Ok(phi),
        }
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phi::Pow(a) => write!(f, "pow:{a}"),
            Phi::Log => write!(f, "log"),
            Phi::Const(c) => write!(f, "const:{c}"),
        }
    }
}

/// Limits on the summands `Phi^{1/2}(M_{t+1}) / M_t^{1-p}` of the selected
/// orders and on their total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionCaps {
    pub summand: f64,
    pub total: f64,
}

impl Default for SelectionCaps {
    fn default() -> Self {
        SelectionCaps {
            summand: 1.0,
            total: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected orders `|alpha_k|`, increasing.
    pub orders: Vec<usize>,
    /// `Phi^{1/2}(M_{t+1}) / M_t^{1-p}` per selected order.
    pub summands: Vec<f64>,
    pub total: f64,
}

/// Greedy choice of block orders `t` with `2 <= t < level_cap`.
pub fn select_alphas(
    spec: &GroupSpec,
    p: f64,
    phi: Phi,
    caps: SelectionCaps,
    level_cap: usize,
) -> Result<Selection> {
    if level_cap > spec.level() {
        return Err(Error::OutOfRange {
            what: "level cap A",
            value: level_cap,
            limit: spec.level(),
        });
    }
    let candidates: Vec<usize> = (2..level_cap).collect();
    if candidates.is_empty() {
        return Err(Error::SelectionFailure(format!(
            "no order t with 2 <= t < A = {level_cap}"
        )));
    }
    let m = |t: usize| spec.power(t) as f64;
    let growth_of_cond: Vec<f64> = (2..=level_cap.min(spec.level()))
        .map(|t| m(t).powf(2.0 - 2.0 * p) / phi.eval(m(t)))
        .collect();
    if let Some(w) = growth_of_cond
        .windows(2)
        .position(|w| w[1] <= w[0] * (1.0 + 1e-12))
    {
        return Err(Error::SelectionFailure(format!(
            "M_t^(2-2p)/Phi(M_t) does not increase between t = {} and t = {} ({} -> {})",
            w + 2,
            w + 3,
            growth_of_cond[w],
            growth_of_cond[w + 1]
        )));
    }
    let mut orders = Vec::new();
    let mut summands = Vec::new();
    let mut total = 0.0;
    let mut best_growth = f64::NEG_INFINITY;
    let (mut over_summand, mut over_total, mut no_growth) = (0, 0, 0);
    for t in candidates {
        let summand = phi.eval(m(t + 1)).sqrt() / m(t).powf(1.0 - p);
        let growth = 1.0 / summand;
        if summand > caps.summand {
            over_summand += 1;
        } else if total + summand > caps.total {
            over_total += 1;
        } else if growth <= best_growth {
            no_growth += 1;
        } else {
            orders.push(t);
            summands.push(summand);
            total += summand;
            best_growth = growth;
        }
    }
    if orders.is_empty() {
        return Err(Error::SelectionFailure(format!(
            "{over_summand} orders exceed the summand cap {}, {over_total} the total cap {}, \
             {no_growth} break the growth trend",
            caps.summand, caps.total
        )));
    }
    Ok(Selection {
        orders,
        summands,
        total,
    })
}

/// Parameters of the counterexample martingale `f_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSpec {
    pub p: f64,
    pub phi: Phi,
    pub level_cap: usize,
    pub caps: SelectionCaps,
}

/// `f_A = sum_k lambda_k a_k` with
/// `a_k = (M_t^{1/p-1}/lambda)(D_{M_{t+1}} - D_{M_t})`, `t = |alpha_k|`.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub spec: GroupSpec,
    pub p: f64,
    pub phi: Phi,
    pub selection: Selection,
    /// `Phi^{1/2p}(M_{t+1})`, the Fourier coefficient on block `t`.
    pub coefficients: Vec<f64>,
    pub weights: Vec<f64>,
    pub atoms: Vec<Atom>,
    pub signal: Signal,
    pub martingale: MartingaleSeq,
}

pub fn build_counterexample(spec: &GroupSpec, cs: &CounterexampleSpec) -> Result<Counterexample> {
    let p = cs.p;
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::InvalidExponent(p));
    }
    let selection = select_alphas(spec, p, cs.phi, cs.caps, cs.level_cap)?;
    let lambda = spec.lambda() as f64;
    let mut coefficients = Vec::new();
    let mut weights = Vec::new();
    let mut atoms = Vec::new();
    let mut values = vec![Complex64::new(0.0, 0.0); spec.size()];
    for &t in &selection.orders {
        let mt = spec.power(t) as f64;
        let coefficient = cs.phi.eval(spec.power(t + 1) as f64).powf(1.0 / (2.0 * p));
        let weight = lambda * coefficient / mt.powf(1.0 / p - 1.0);
        let scale = mt.powf(1.0 / p - 1.0) / lambda;
        let signal = Signal::from_fn(spec, |x| {
            let d = dirichlet_power(spec, t + 1, x) - dirichlet_power(spec, t, x);
            Complex64::new(scale * d, 0.0)
        });
        let atom = Atom::new(signal, Interval::new(spec, 0, t)?, p)?;
        for (v, a) in values.iter_mut().zip(atom.signal.values()) {
            *v += a * weight;
        }
        coefficients.push(coefficient);
        weights.push(weight);
        atoms.push(atom);
    }
    let signal = Signal::new(spec, values)?;
    let martingale = MartingaleSeq::from_signal(&signal);
    Ok(Counterexample {
        spec: spec.clone(),
        p,
        phi: cs.phi,
        selection,
        coefficients,
        weights,
        atoms,
        signal,
        martingale,
    })
}

impl Counterexample {
    /// Block index `k` with `M_{t_k} <= j < M_{t_k + 1}`.
    pub fn block_of(&self, j: usize) -> Option<usize> {
        self.selection
            .orders
            .iter()
            .position(|&t| self.spec.power(t) <= j && j < self.spec.power(t + 1))
    }

    /// The Fourier coefficients `f^(j)`: the block coefficient inside a
    /// selected block, zero elsewhere.
    pub fn expected_spectrum(&self) -> Spectrum {
        let coeffs = (0..self.spec.size())
            .map(|j| match self.block_of(j) {
                Some(k) => Complex64::new(self.coefficients[k], 0.0),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        Spectrum::new(&self.spec, coeffs).unwrap()
    }

    /// Max deviation of the transform of `f_A` from the expected
    /// coefficients, relative to the largest coefficient.
    pub fn coefficient_error(&self) -> f64 {
        let scale = self.coefficients.iter().fold(1.0f64, |a, &b| a.max(b));
        forward_fast(&self.signal).max_abs_diff(&self.expected_spectrum()) / scale
    }
}

/// Pieces of `sigma_alpha f` evaluated over `I_2^{0,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub alphas: usize,
    pub points: usize,
    pub max_first: f64,
    pub max_second_complete: f64,
    /// `min |II_2| / (Phi^{1/2p}(M_{t+1}) / alpha)`.
    pub min_tail_ratio: f64,
    /// `max |I + II_1 + II_2 - sigma_alpha f|`.
    pub max_split_error: f64,
    /// Tolerance scale `max(1, max |f|)`.
    pub scale: f64,
    pub violations: usize,
}

impl SplitReport {
    pub fn passes(&self) -> bool {
        self.violations == 0 && self.alphas > 0
    }
}

/// Every `alpha in A_{0,2}` lying strictly inside a selected block.
pub fn split_alphas(ce: &Counterexample) -> Vec<usize> {
    ce.selection
        .orders
        .iter()
        .flat_map(|&t| (ce.spec.power(t) + 1..ce.spec.power(t + 1)).filter(|&a| in_a02(&ce.spec, a)))
        .collect()
}

/// Points with `x_0 = x_1 = 1`.
pub fn ring_points(spec: &GroupSpec) -> Vec<usize> {
    (0..spec.size())
        .filter(|&x| spec.digit(x, 0) == 1 && spec.digit(x, 1) == 1)
        .collect()
}

/// Splits `sigma_alpha f` at the start of the block of `alpha` and checks
/// `I = 0`, `II_1 = 0`, `|II_2| >= Phi^{1/2p}(M_{t+1}) / alpha` on
/// `I_2^{0,1}` for each `alpha`.
pub fn sigma_split_check(ce: &Counterexample, alphas: &[usize], tol: f64) -> Result<SplitReport> {
    let spec = &ce.spec;
    let mut blocks = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !in_a02(spec, alpha) {
            return Err(Error::Hypothesis(format!("alpha = {alpha} is not in A_02")));
        }
        let t = spec.order(alpha) as usize;
        let k = ce.selection.orders.iter().position(|&s| s == t).ok_or_else(|| {
            Error::Hypothesis(format!("alpha = {alpha} has order {t}, not a selected block"))
        })?;
        if alpha == spec.power(t) {
            return Err(Error::Hypothesis(format!("alpha = {alpha} equals M_{t}")));
        }
        blocks.push((alpha, t, k));
    }
    let points = ring_points(spec);
    let n_top = alphas.iter().copied().max().unwrap_or(0);

    // spectral route: sigma_alpha f at the ring points
    let spectrum = forward_fast(&ce.signal);
    let mut reference = vec![vec![Complex64::new(0.0, 0.0); points.len()]; alphas.len()];
    let mut sweep = MeanSweep::new(&spectrum);
    while let Some(k) = sweep.advance() {
        for (i, &alpha) in alphas.iter().enumerate() {
            if alpha == k {
                for (r, &x) in reference[i].iter_mut().zip(&points) {
                    *r = sweep.mean()[x];
                }
            }
        }
        if k >= n_top {
            break;
        }
    }

    let scale = ce.signal.sup_norm().max(1.0);
    let chars = Characters::new(spec);
    let per_point: Vec<(f64, f64, f64, f64, usize)> = points
        .par_iter()
        .enumerate()
        .map(|(pi, &x)| {
            // d[j] = D_j(x), s[j] = sum_{i<=j} D_i(x)
            let mut d = Vec::with_capacity(n_top + 1);
            let mut s = Vec::with_capacity(n_top + 1);
            d.push(Complex64::new(0.0, 0.0));
            s.push(Complex64::new(0.0, 0.0));
            for j in 1..=n_top {
                let next = d[j - 1] + chars.value(j - 1, x);
                d.push(next);
                s.push(s[j - 1] + next);
            }
            let mut out = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64, 0usize);
            for (i, &(alpha, t, k)) in blocks.iter().enumerate() {
                let mt = spec.power(t);
                let af = alpha as f64;
                let mut first = Complex64::new(0.0, 0.0);
                let mut second = Complex64::new(0.0, 0.0);
                for eta in 0..k {
                    let te = ce.selection.orders[eta];
                    let (lo, hi) = (spec.power(te), spec.power(te + 1));
                    let c = ce.coefficients[eta];
                    // sum_{j=1}^{M_t} of block eta's part of S_j f
                    let ramp = s[hi] - s[lo] - d[lo] * (hi - lo) as f64;
                    let flat = (d[hi] - d[lo]) * (mt - hi) as f64;
                    first += (ramp + flat) * c;
                    second += (d[hi] - d[lo]) * c;
                }
                let first = first / af;
                let second = second * ((alpha - mt) as f64 / af);
                let tail = (s[alpha] - s[mt] - d[mt] * (alpha - mt) as f64) * (ce.coefficients[k] / af);
                let bound = ce.coefficients[k] / af;
                let ratio = tail.norm() / bound;
                let split_error = (first + second + tail - reference[i][pi]).norm();
                if first.norm() > tol * scale
                    || second.norm() > tol * scale
                    || ratio < 1.0 - tol
                    || split_error > tol * scale
                {
                    out.4 += 1;
                }
                out.0 = out.0.max(first.norm());
                out.1 = out.1.max(second.norm());
                out.2 = out.2.min(ratio);
                out.3 = out.3.max(split_error);
            }
            out
        })
        .collect();
    let mut report = SplitReport {
        alphas: alphas.len(),
        points: points.len(),
        max_first: 0.0,
        max_second_complete: 0.0,
        min_tail_ratio: f64::INFINITY,
        max_split_error: 0.0,
        scale,
        violations: 0,
    };
    for (a, b, c, e, v) in per_point {
        report.max_first = report.max_first.max(a);
        report.max_second_complete = report.max_second_complete.max(b);
        report.min_tail_ratio = report.min_tail_ratio.min(c);
        report.max_split_error = report.max_split_error.max(e);
        report.violations += v;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub term: f64,
    pub partial_sum: f64,
    pub block_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockIncrement {
    pub block_id: usize,
    pub order: usize,
    /// Sum of terms over `n in A_{0,2}` with `M_t < n < M_{t+1}`.
    pub increment: f64,
    /// `M_t^{1-p} / Phi^{1/2}(M_{t+1})`.
    pub scale: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCurve {
    pub restricted: bool,
    pub rows: Vec<DivergenceRow>,
    pub blocks: Vec<BlockIncrement>,
}

impl DivergenceCurve {
    pub fn final_sum(&self) -> f64 {
        self.rows.last().map(|r| r.partial_sum).unwrap_or(0.0)
    }

    pub fn increments_increase(&self) -> bool {
        self.blocks
            .windows(2)
            .all(|w| w[1].increment > w[0].increment)
    }
}

/// Partial sums of `||sigma_k f||_{L_{p,inf}}^p / Phi(k)` for `k <= n_max`,
/// optionally restricted to `k in A_{0,2}`.
pub fn divergence_sum(ce: &Counterexample, n_max: usize, restrict: bool) -> Result<DivergenceCurve> {
    let spec = &ce.spec;
    if n_max == 0 || n_max > spec.size() {
        return Err(Error::OutOfRange {
            what: "n_max",
            value: n_max,
            limit: spec.size(),
        });
    }
    let spectrum = forward_fast(&ce.signal);
    let mut sweep = MeanSweep::new(&spectrum);
    let mut terms: Vec<(usize, f64)> = Vec::new();
    const BATCH: usize = 128;
    let mut batch: Vec<(usize, Signal)> = Vec::with_capacity(BATCH);
    let flush = |batch: &mut Vec<(usize, Signal)>, terms: &mut Vec<(usize, f64)>| -> Result<()> {
        let done: Vec<(usize, f64)> = batch
            .par_iter()
            .map(|(k, s)| Ok((*k, weak_lp_power(s, ce.p)? / ce.phi.eval(*k as f64))))
            .collect::<Result<_>>()?;
        terms.extend(done);
        batch.clear();
        Ok(())
    };
    while let Some(k) = sweep.advance() {
        if !restrict || in_a02(spec, k) {
            batch.push((k, Signal::new(spec, sweep.mean().to_vec())?));
            if batch.len() == BATCH {
                flush(&mut batch, &mut terms)?;
            }
        }
        if k >= n_max {
            break;
        }
    }
    flush(&mut batch, &mut terms)?;

    let mut rows = Vec::with_capacity(terms.len());
    let mut partial = 0.0;
    for (n, term) in terms {
        partial += term;
        rows.push(DivergenceRow {
            n,
            term,
            partial_sum: partial,
            block_id: ce.block_of(n),
        });
    }
    let blocks = ce
        .selection
        .orders
        .iter()
        .enumerate()
        .filter(|(_, &t)| spec.power(t + 1) <= n_max + 1)
        .map(|(k, &t)| {
            let increment: f64 = rows
                .iter()
                .filter(|r| r.n > spec.power(t) && r.n < spec.power(t + 1) && in_a02(spec, r.n))
                .map(|r| r.term)
                .sum();
            let scale = (spec.power(t) as f64).powf(1.0 - ce.p)
                / ce.phi.eval(spec.power(t + 1) as f64).sqrt();
            BlockIncrement {
                block_id: k,
                order: t,
                increment,
                scale,
                ratio: increment / scale,
            }
        })
        .collect();
    Ok(DivergenceCurve {
        restricted: restrict,
        rows,
        blocks,
    })
}
