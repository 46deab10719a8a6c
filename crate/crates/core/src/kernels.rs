//! Dirichlet and Fejer kernels.
//!
//! Brute-force tables (direct character sums) sit next to the closed-form
//! identities they are checked against: the indicator form of `D_{M_n}`, the
//! digit-wise closed form of `D_n`, the two-branch value of `K_{M_n}`, the
//! factorization of `D_{s M_n}`, the vanishing of `K_{s M_n}` off the
//! diagonal, and the expansion of `n K_n` along the digits of `n`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Region};
use crate::system::{unit_root, Characters, Signal};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    Dirichlet,
    Fejer,
}

/// Kernel values over all cosets.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub kind: KernelKind,
    pub order: usize,
    pub signal: Signal,
}

impl KernelTable {
    pub fn values(&self) -> &[Complex64] {
        self.signal.values()
    }

    pub fn spec(&self) -> &GroupSpec {
        self.signal.spec()
    }
}

fn check_order(spec: &GroupSpec, n: usize) -> Result<()> {
    if n == 0 || n > spec.size() {
        Err(Error::OutOfRange {
            what: "kernel order",
            value: n,
            limit: spec.size(),
        })
    } else {
        Ok(())
    }
}

/// `D_n = sum_{k<n} psi_k`, by direct summation of character rows.
pub fn dirichlet(spec: &GroupSpec, n: usize) -> Result<KernelTable> {
    check_order(spec, n)?;
    let chars = Characters::new(spec);
    let mut values = vec![ZERO; spec.size()];
    let mut row = Vec::with_capacity(spec.size());
    for k in 0..n {
        chars.row_into(k, &mut row);
        for (v, r) in values.iter_mut().zip(&row) {
            *v += r;
        }
    }
    Ok(KernelTable {
        kind: KernelKind::Dirichlet,
        order: n,
        signal: Signal::new(spec, values)?,
    })
}

/// `K_n = (1/n) sum_{k=1}^n D_k`, by running sums of Dirichlet kernels.
pub fn fejer(spec: &GroupSpec, n: usize) -> Result<KernelTable> {
    check_order(spec, n)?;
    let mut sweep = KernelSweep::new(spec);
    while sweep.order() < n {
        sweep.advance();
    }
    Ok(sweep.fejer_table())
}

/// Steps through `n = 1, 2, ..., M_N`, keeping `D_n` and `sum_{k<=n} D_k`.
pub struct KernelSweep {
    spec: GroupSpec,
    chars: Characters,
    n: usize,
    dirichlet: Vec<Complex64>,
    running: Vec<Complex64>,
    row: Vec<Complex64>,
}

impl KernelSweep {
    pub fn new(spec: &GroupSpec) -> Self {
        KernelSweep {
            spec: spec.clone(),
            chars: Characters::new(spec),
            n: 0,
            dirichlet: vec![ZERO; spec.size()],
            running: vec![ZERO; spec.size()],
            row: Vec::with_capacity(spec.size()),
        }
    }

    /// Advances to the next order; `None` once `M_N` has been reached.
    pub fn advance(&mut self) -> Option<usize> {
        if self.n >= self.spec.size() {
            return None;
        }
        self.chars.row_into(self.n, &mut self.row);
        for ((d, s), r) in self
            .dirichlet
            .iter_mut()
            .zip(self.running.iter_mut())
            .zip(&self.row)
        {
            *d += r;
            *s += *d;
        }
        self.n += 1;
        Some(self.n)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// `D_n` at the current order.
    pub fn dirichlet(&self) -> &[Complex64] {
        &self.dirichlet
    }

    /// `n K_n = sum_{k<=n} D_k` at the current order.
    pub fn fejer_sum(&self) -> &[Complex64] {
        &self.running
    }

    pub fn fejer_at(&self, x: usize) -> Complex64 {
        self.running[x] / self.n as f64
    }

    pub fn fejer_values(&self) -> Vec<Complex64> {
        let inv = 1.0 / self.n as f64;
        self.running.iter().map(|v| v * inv).collect()
    }

    pub fn dirichlet_table(&self) -> KernelTable {
        KernelTable {
            kind: KernelKind::Dirichlet,
            order: self.n,
            signal: Signal::new(&self.spec, self.dirichlet.clone()).unwrap(),
        }
    }

    pub fn fejer_table(&self) -> KernelTable {
        KernelTable {
            kind: KernelKind::Fejer,
            order: self.n,
            signal: Signal::new(&self.spec, self.fejer_values()).unwrap(),
        }
    }
}

/// `D_{M_n}(x)`: `M_n` on `I_n`, zero elsewhere.
pub fn dirichlet_power(spec: &GroupSpec, n: usize, x: usize) -> f64 {
    if spec.same_prefix(x, 0, n) {
        spec.power(n) as f64
    } else {
        0.0
    }
}

/// Closed form
/// `D_n(x) = psi_n(x) sum_j D_{M_j}(x) sum_{p=m_j-n_j}^{m_j-1} r_j(x)^p`.
pub fn dirichlet_closed(spec: &GroupSpec, n: usize, x: usize) -> Result<Complex64> {
    if n >= spec.size() {
        return Err(Error::OutOfRange {
            what: "kernel order",
            value: n,
            limit: spec.size() - 1,
        });
    }
    let mut psi = ONE;
    let mut total = ZERO;
    for j in 0..spec.level() {
        let m = spec.radix(j);
        let nj = spec.digit(n, j) as u64;
        let xj = spec.digit(x, j) as u64;
        if nj == 0 {
            continue;
        }
        psi *= unit_root(m, nj * xj);
        let dm = dirichlet_power(spec, j, x);
        if dm == 0.0 {
            continue;
        }
        let inner: Complex64 = (m as u64 - nj..m as u64)
            .map(|p| unit_root(m, p * xj))
            .sum();
        total += inner * dm;
    }
    Ok(psi * total)
}

/// Value of `K_{M_n}` given by the two-branch formula, or a marker when the
/// formula does not cover the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FejerPowerValue {
    Value(Complex64),
    /// `x in I_n`: the formula says nothing here.
    OutsideDomain,
}

/// `K_{M_n}(x)` for `x in I_t \ I_{t+1}` with `t < n`: zero when
/// `x - x_t e_t` is not in `I_n`, `M_t / (1 - r_t(x))` when it is.
pub fn fejer_power_closed(spec: &GroupSpec, n: usize, x: usize) -> Result<FejerPowerValue> {
    if n > spec.level() {
        return Err(Error::OutOfRange {
            what: "power index",
            value: n,
            limit: spec.level(),
        });
    }
    let t = match spec.first_nonzero(x) {
        Some(t) if t < n => t,
        _ => return Ok(FejerPowerValue::OutsideDomain),
    };
    let xt = spec.digit(x, t);
    let shifted = x - xt as usize * spec.power(t);
    if !spec.same_prefix(shifted, 0, n) {
        return Ok(FejerPowerValue::Value(ZERO));
    }
    let r = unit_root(spec.radix(t), xt as u64);
    Ok(FejerPowerValue::Value(
        Complex64::new(spec.power(t) as f64, 0.0) / (ONE - r),
    ))
}

/// `D_{s M_n} = D_{M_n} sum_{k<s} r_n^k`, with `D_{M_n}` taken from its
/// indicator form.
pub fn dirichlet_multiple(spec: &GroupSpec, s: u32, n: usize) -> Result<KernelTable> {
    if n >= spec.level() {
        return Err(Error::OutOfRange {
            what: "power index",
            value: n,
            limit: spec.level(),
        });
    }
    let m = spec.radix(n);
    if s == 0 || s >= m {
        return Err(Error::OutOfRange {
            what: "multiplier s",
            value: s as usize,
            limit: m as usize,
        });
    }
    let signal = Signal::from_fn(spec, |x| {
        let xn = spec.digit(x, n) as u64;
        let geometric: Complex64 = (0..s as u64).map(|k| unit_root(m, k * xn)).sum();
        geometric * dirichlet_power(spec, n, x)
    });
    Ok(KernelTable {
        kind: KernelKind::Dirichlet,
        order: s as usize * spec.power(n),
        signal,
    })
}

/// Checks that `K_{s M_n}(x)` vanishes when `x in I_t \ I_{t+1}`, `n > t`,
/// `s < m_n` and `x - x_t e_t` is not in `I_n`.
///
/// The kernel value is computed by brute force. Returns `Ok(true)` when
/// `|K_{s M_n}(x)| <= 1e-10`.
pub fn fejer_multiple_vanishes(
    spec: &GroupSpec,
    s: u32,
    n: usize,
    t: usize,
    x: usize,
) -> Result<bool> {
    if n >= spec.level() {
        return Err(Error::Hypothesis(format!(
            "n = {n} must be below the level {}",
            spec.level()
        )));
    }
    if t >= n {
        return Err(Error::Hypothesis(format!("need n > t, got n = {n}, t = {t}")));
    }
    if s == 0 || s >= spec.radix(n) {
        return Err(Error::Hypothesis(format!(
            "need 1 <= s < m_n = {}, got s = {s}",
            spec.radix(n)
        )));
    }
    if x >= spec.size() || spec.first_nonzero(x) != Some(t) {
        return Err(Error::Hypothesis(format!("x = {x} is not in I_{t} \\ I_{}", t + 1)));
    }
    let shifted = x - spec.digit(x, t) as usize * spec.power(t);
    if spec.same_prefix(shifted, 0, n) {
        return Err(Error::Hypothesis(format!("x - x_t e_t lies in I_{n}")));
    }
    Ok(fejer_at(spec, s as usize * spec.power(n), x).norm() <= 1e-10)
}

/// `K_n(x)` at a single point by direct summation.
pub fn fejer_at(spec: &GroupSpec, n: usize, x: usize) -> Complex64 {
    let chars = Characters::new(spec);
    let mut d = ZERO;
    let mut acc = ZERO;
    for k in 0..n {
        d += chars.value(k, x);
        acc += d;
    }
    acc / n as f64
}

/// One term `prefactor(x) * weight * kernel(x)` of the digit expansion of
/// `n K_n`.
#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    /// `prod_{j<k} r_{n_j}(x)^{s_j}` over all cosets.
    pub prefactor: Vec<Complex64>,
    pub weight: f64,
    pub kernel: Arc<KernelTable>,
}

/// `n K_n` written as
/// `sum_k P_k s_k M_{n_k} K_{s_k M_{n_k}} + sum_{k<r} P_k n^(k) D_{s_k M_{n_k}}`
/// where `n = sum_i s_i M_{n_i}` with `n_1 > ... > n_r`.
#[derive(Debug, Clone)]
pub struct FejerExpansion {
    pub n: usize,
    /// `(n_i, s_i)` from the highest nonzero digit down.
    pub digits: Vec<(usize, u32)>,
    /// `n^(k) = n - sum_{i<=k} s_i M_{n_i}` for `k = 1..=r`.
    pub tails: Vec<usize>,
    pub fejer_terms: Vec<ExpansionTerm>,
    pub dirichlet_terms: Vec<ExpansionTerm>,
}

impl FejerExpansion {
    /// Pointwise sum of all terms, which should equal `n K_n`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let size = self
            .fejer_terms
            .first()
            .map(|t| t.prefactor.len())
            .unwrap_or(0);
        let mut out = vec![ZERO; size];
        for term in self.fejer_terms.iter().chain(&self.dirichlet_terms) {
            for ((o, p), k) in out
                .iter_mut()
                .zip(&term.prefactor)
                .zip(term.kernel.values())
            {
                *o += p * k * term.weight;
            }
        }
        out
    }
}

/// Builds the digit expansion of `n K_n`; kernels come from `cache`.
pub fn fejer_expansion(spec: &GroupSpec, n: usize, cache: &KernelCache) -> Result<FejerExpansion> {
    if n == 0 || n >= spec.size() {
        return Err(Error::OutOfRange {
            what: "kernel order",
            value: n,
            limit: spec.size() - 1,
        });
    }
    let digits: Vec<(usize, u32)> = (0..spec.level())
        .rev()
        .filter_map(|j| {
            let d = spec.digit(n, j);
            (d != 0).then_some((j, d))
        })
        .collect();
    let mut tails = Vec::with_capacity(digits.len());
    let mut rest = n;
    for &(j, s) in &digits {
        rest -= s as usize * spec.power(j);
        tails.push(rest);
    }

    let size = spec.size();
    let mut prefactor = vec![ONE; size];
    let mut fejer_terms = Vec::with_capacity(digits.len());
    let mut dirichlet_terms = Vec::with_capacity(digits.len().saturating_sub(1));
    for (k, &(j, s)) in digits.iter().enumerate() {
        let order = s as usize * spec.power(j);
        fejer_terms.push(ExpansionTerm {
            prefactor: prefactor.clone(),
            weight: order as f64,
            kernel: cache.get(spec, KernelKind::Fejer, order)?,
        });
        if k + 1 < digits.len() {
            dirichlet_terms.push(ExpansionTerm {
                prefactor: prefactor.clone(),
                weight: tails[k] as f64,
                kernel: cache.get(spec, KernelKind::Dirichlet, order)?,
            });
        }
        let m = spec.radix(j);
        for (x, p) in prefactor.iter_mut().enumerate() {
            *p *= unit_root(m, s as u64 * spec.digit(x, j) as u64);
        }
    }
    Ok(FejerExpansion {
        n,
        digits,
        tails,
        fejer_terms,
        dirichlet_terms,
    })
}

/// `integral |K_n| d mu`.
pub fn kernel_l1_norm(spec: &GroupSpec, n: usize) -> Result<f64> {
    let k = fejer(spec, n)?;
    Ok(l1_mean(k.values()))
}

fn l1_mean(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).sum::<f64>() / values.len() as f64
}

/// `integral |K_n|` for every `n = 1..=M_N`, in one sweep.
pub fn kernel_l1_profile(spec: &GroupSpec) -> Vec<f64> {
    let mut sweep = KernelSweep::new(spec);
    let mut out = Vec::with_capacity(spec.size());
    while let Some(n) = sweep.advance() {
        let inv = 1.0 / n as f64;
        out.push(
            sweep
                .fejer_sum()
                .iter()
                .map(|v| (v * inv).norm())
                .sum::<f64>()
                / spec.size() as f64,
        );
    }
    out
}

/// Right-hand side of the local integral bound: `M_l M_k / (n M_depth)` for
/// `l < depth`, `M_k / M_depth` for `l = depth`.
fn local_bound(spec: &GroupSpec, n: usize, k: usize, l: usize, depth: usize) -> f64 {
    if l < depth {
        (spec.power(l) as f64 * spec.power(k) as f64) / (n as f64 * spec.power(depth) as f64)
    } else {
        spec.power(k) as f64 / spec.power(depth) as f64
    }
}

/// `integral_{I_depth} |K(x - t)| d mu(t)` for a tabulated kernel.
fn local_integral(spec: &GroupSpec, kernel: &[Complex64], x: usize, depth: usize) -> f64 {
    let sum: f64 = spec
        .interval_indices(0, depth)
        .map(|t| kernel[spec.sub_index(x, t)].norm())
        .sum();
    sum / spec.size() as f64
}

fn check_local_bound(spec: &GroupSpec, n: usize, depth: usize) -> Result<()> {
    if depth == 0 || depth > spec.level() {
        return Err(Error::OutOfRange {
            what: "inner depth",
            value: depth,
            limit: spec.level(),
        });
    }
    if n < spec.power(depth) {
        return Err(Error::Hypothesis(format!(
            "n = {n} is below M_{depth} = {}",
            spec.power(depth)
        )));
    }
    check_order(spec, n)
}

/// Empirical constant of the local Fejer-kernel integral bound on the region
/// `I_depth^{k,l}`: the sup over `x` in the region of
/// `integral_{I_depth} |K_n(x-t)| d mu(t)` divided by its bound.
pub fn local_bound_ratio(spec: &GroupSpec, n: usize, k: usize, l: usize, depth: usize) -> Result<f64> {
    check_local_bound(spec, n, depth)?;
    if !(k < l && l <= depth) {
        return Err(Error::Hypothesis(format!("need k < l <= {depth}, got ({k}, {l})")));
    }
    let kernel = fejer(spec, n)?;
    let region = Region::Ring { k, l };
    let bound = local_bound(spec, n, k, l, depth);
    Ok((0..spec.size())
        .filter(|&x| spec.region_at(x, depth) == region)
        .map(|x| local_integral(spec, kernel.values(), x, depth) / bound)
        .fold(0.0, f64::max))
}

/// Sup of the local-bound ratio over every region, for every
/// `n in [M_depth, M_N]`. Entry `i` is for `n = M_depth + i`.
pub fn local_bound_profile(spec: &GroupSpec, depth: usize) -> Result<Vec<f64>> {
    check_local_bound(spec, spec.power(depth), depth)?;
    let labels: Vec<Option<(usize, usize)>> = (0..spec.size())
        .map(|x| match spec.region_at(x, depth) {
            Region::Inside => None,
            Region::Ring { k, l } => Some((k, l)),
        })
        .collect();
    let mut sweep = KernelSweep::new(spec);
    let mut out = Vec::new();
    let mut kernel = Vec::with_capacity(spec.size());
    while let Some(n) = sweep.advance() {
        if n < spec.power(depth) {
            continue;
        }
        kernel.clear();
        kernel.extend(sweep.fejer_values());
        let sup = labels
            .iter()
            .enumerate()
            .filter_map(|(x, label)| {
                label.map(|(k, l)| {
                    local_integral(spec, &kernel, x, depth) / local_bound(spec, n, k, l, depth)
                })
            })
            .fold(0.0, f64::max);
        out.push(sup);
    }
    Ok(out)
}

/// `(f * K)(x) = integral f(t) K(x - t) d mu(t)`, quadratic.
pub fn convolve(f: &Signal, kernel: &KernelTable) -> Result<Signal> {
    let spec = f.spec();
    if spec != kernel.spec() {
        return Err(Error::SpecMismatch);
    }
    let k = kernel.values();
    let inv = 1.0 / spec.size() as f64;
    Ok(Signal::from_fn(spec, |x| {
        f.values()
            .iter()
            .enumerate()
            .map(|(t, v)| v * k[spec.sub_index(x, t)])
            .sum::<Complex64>()
            * inv
    }))
}

/// Bounded least-recently-used cache of brute-force kernel tables.
pub struct KernelCache {
    budget: usize,
    state: Mutex<CacheState>,
}

type CacheKey = (Vec<u32>, KernelKind, usize);

#[derive(Default)]
struct CacheState {
    tick: u64,
    entries: HashMap<CacheKey, (Arc<KernelTable>, u64)>,
}

impl Default for KernelCache {
    fn default() -> Self {
        Self::new(256)
    }
}

impl KernelCache {
    pub fn new(budget: usize) -> Self {
        KernelCache {
            budget: budget.max(1),
            state: Mutex::new(CacheState::default()),
        }
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, spec: &GroupSpec, kind: KernelKind, n: usize) -> Result<Arc<KernelTable>> {
        let key = (spec.radices().to_vec(), kind, n);
        {
            let mut state = self.state.lock().unwrap();
            state.tick += 1;
            let tick = state.tick;
            if let Some(entry) = state.entries.get_mut(&key) {
                entry.1 = tick;
                return Ok(entry.0.clone());
            }
        }
        // built outside the lock; a concurrent duplicate build is harmless
        let table = Arc::new(match kind {
            KernelKind::Dirichlet => dirichlet(spec, n)?,
            KernelKind::Fejer => fejer(spec, n)?,
        });
        let mut state = self.state.lock().unwrap();
        state.tick += 1;
        let tick = state.tick;
        state.entries.insert(key, (table.clone(), tick));
        while state.entries.len() > self.budget {
            let oldest = state
                .entries
                .iter()
                .min_by_key(|(_, (_, t))| *t)
                .map(|(k, _)| k.clone())
                .unwrap();
            state.entries.remove(&oldest);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fejer_mean;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn dirichlet_examples() {
        let w = GroupSpec::walsh(2).unwrap();
        let d1 = dirichlet(&w, 1).unwrap();
        assert!(d1.values().iter().all(|&v| v == ONE));
        let x = w.point_from_digits(&[0, 1]).unwrap();
        assert_eq!(dirichlet(&w, 3).unwrap().values()[x.index()], ONE);
        assert!(dirichlet(&w, 0).is_err());
        assert!(dirichlet(&w, 5).is_err());
    }

    #[test]
    fn dirichlet_at_zero_and_powers() {
        let g = GroupSpec::new(&[2, 3, 4], 3).unwrap();
        let mut sweep = KernelSweep::new(&g);
        while let Some(n) = sweep.advance() {
            assert_eq!(sweep.dirichlet()[0], Complex64::new(n as f64, 0.0));
            assert!(close(sweep.fejer_at(0), Complex64::new((n + 1) as f64 / 2.0, 0.0), 1e-10));
        }
        for n in 0..=g.level() {
            let d = dirichlet(&g, g.power(n)).unwrap();
            for x in 0..g.size() {
                assert!(close(d.values()[x], dirichlet_power(&g, n, x).into(), 1e-10));
            }
        }
    }

    #[test]
    fn closed_form_small_exhaustive() {
        for g in [
            GroupSpec::walsh(5).unwrap(),
            GroupSpec::new(&[2, 3, 4], 3).unwrap(),
            GroupSpec::new(&[3, 3, 3], 3).unwrap(),
        ] {
            let mut sweep = KernelSweep::new(&g);
            while let Some(n) = sweep.advance() {
                if n >= g.size() {
                    break;
                }
                for x in 0..g.size() {
                    let c = dirichlet_closed(&g, n, x).unwrap();
                    assert!(close(c, sweep.dirichlet()[x], 1e-10), "n={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn fejer_examples() {
        let w = GroupSpec::walsh(3).unwrap();
        assert!(fejer(&w, 1).unwrap().values().iter().all(|&v| v == ONE));
        let k2 = fejer(&w, 2).unwrap();
        assert!(close(k2.values()[1], Complex64::new(0.5, 0.0), 1e-15));
        let k5 = fejer(&w, 5).unwrap();
        assert!(close(k5.values()[0], Complex64::new(3.0, 0.0), 1e-12));
    }

    #[test]
    fn fejer_power_examples() {
        let w = GroupSpec::walsh(3).unwrap();
        let x = w.point_from_digits(&[1, 0, 0]).unwrap().index();
        assert_eq!(
            fejer_power_closed(&w, 2, x).unwrap(),
            FejerPowerValue::Value(Complex64::new(0.5, 0.0))
        );
        let brute = fejer(&w, 4).unwrap().values()[x];
        assert!(close(brute, Complex64::new(0.5, 0.0), 1e-12));
        let x = w.point_from_digits(&[0, 1, 1]).unwrap().index();
        assert_eq!(
            fejer_power_closed(&w, 2, x).unwrap(),
            FejerPowerValue::Value(ONE)
        );
        let x = w.point_from_digits(&[1, 1, 0]).unwrap().index();
        assert_eq!(
            fejer_power_closed(&w, 2, x).unwrap(),
            FejerPowerValue::Value(ZERO)
        );
        assert!(fejer(&w, 4).unwrap().values()[x].norm() < 1e-12);
        assert_eq!(
            fejer_power_closed(&w, 2, 4).unwrap(),
            FejerPowerValue::OutsideDomain
        );
        assert_eq!(
            fejer_power_closed(&w, 2, 0).unwrap(),
            FejerPowerValue::OutsideDomain
        );
    }

    #[test]
    fn fejer_power_exhaustive_mixed() {
        let g = GroupSpec::new(&[2, 3, 4], 3).unwrap();
        for n in 1..=g.level() {
            let k = fejer(&g, g.power(n)).unwrap();
            for x in 0..g.size() {
                if let FejerPowerValue::Value(v) = fejer_power_closed(&g, n, x).unwrap() {
                    assert!(close(v, k.values()[x], 1e-10), "n={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let cache = KernelCache::default();
        let w = GroupSpec::walsh(3).unwrap();
        let e = fejer_expansion(&w, 4, &cache).unwrap();
        assert_eq!(e.fejer_terms.len(), 1);
        assert!(e.dirichlet_terms.is_empty());
        assert_eq!(e.tails, vec![0]);

        let e = fejer_expansion(&w, 3, &cache).unwrap();
        assert_eq!(e.digits, vec![(1, 1), (0, 1)]);
        assert_eq!(e.tails, vec![1, 0]);
        assert_eq!(e.dirichlet_terms.len(), 1);
        assert_eq!(e.dirichlet_terms[0].kernel.order, 2);
        let target = fejer(&w, 3).unwrap();
        for (x, v) in e.reconstruct().iter().enumerate() {
            assert!(close(*v, target.values()[x] * 3.0, 1e-12));
        }
    }

    #[test]
    fn expansion_exhaustive_small() {
        let cache = KernelCache::default();
        for g in [GroupSpec::walsh(5).unwrap(), GroupSpec::new(&[3, 2, 3], 3).unwrap()] {
            let mut sweep = KernelSweep::new(&g);
            while let Some(n) = sweep.advance() {
                if n >= g.size() {
                    break;
                }
                let e = fejer_expansion(&g, n, &cache).unwrap();
                let err = crate::system::max_abs_diff(&e.reconstruct(), sweep.fejer_sum());
                assert!(err <= 1e-9, "n={n} err={err}");
            }
        }
    }

    #[test]
    fn dirichlet_multiple_matches_brute() {
        let g = GroupSpec::new(&[2, 3, 2], 3).unwrap();
        let lhs = dirichlet_multiple(&g, 2, 1).unwrap();
        let rhs = dirichlet(&g, 4).unwrap();
        assert!(lhs.signal.max_abs_diff(&rhs.signal) < 1e-10);
        let one = dirichlet_multiple(&g, 1, 2).unwrap();
        assert!(one.signal.max_abs_diff(&dirichlet(&g, 6).unwrap().signal) < 1e-10);
        assert!(dirichlet_multiple(&g, 3, 1).is_err());
        assert!(dirichlet_multiple(&g, 2, 0).is_err());
        assert!(dirichlet_multiple(&g, 1, 0).is_ok());
    }

    #[test]
    fn vanishing_examples() {
        let w = GroupSpec::walsh(4).unwrap();
        let x = w.point_from_digits(&[1, 1, 1, 0]).unwrap().index();
        assert!(fejer_multiple_vanishes(&w, 1, 2, 0, x).unwrap());
        let g = GroupSpec::new(&[2, 3, 2, 2], 4).unwrap();
        let x = g.point_from_digits(&[1, 1, 0, 0]).unwrap().index();
        assert!(fejer_multiple_vanishes(&g, 1, 2, 0, x).unwrap());
        let g = GroupSpec::new(&[2, 2, 3, 2], 4).unwrap();
        let x = g.point_from_digits(&[1, 1, 0, 0]).unwrap().index();
        assert!(fejer_multiple_vanishes(&g, 2, 2, 0, x).unwrap());
        // hypothesis violations
        assert!(fejer_multiple_vanishes(&w, 1, 2, 2, x).is_err());
        let inside = w.point_from_digits(&[1, 0, 1, 0]).unwrap().index();
        assert!(matches!(
            fejer_multiple_vanishes(&w, 1, 2, 0, inside),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn l1_norms() {
        let w = GroupSpec::walsh(4).unwrap();
        assert_eq!(kernel_l1_norm(&w, 1).unwrap(), 1.0);
        let profile = kernel_l1_profile(&w);
        for n in 1..=w.size() {
            assert!((profile[n - 1] - kernel_l1_norm(&w, n).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn local_ratio_is_finite() {
        let w = GroupSpec::walsh(6).unwrap();
        let r = local_bound_ratio(&w, 20, 0, 1, 3).unwrap();
        assert!(r.is_finite() && r >= 0.0);
        assert!(matches!(
            local_bound_ratio(&w, 4, 0, 1, 3),
            Err(Error::Hypothesis(_))
        ));
        let profile = local_bound_profile(&w, 3).unwrap();
        assert_eq!(profile.len(), w.size() - w.power(3) + 1);
        let max_at_20 = w
            .regions(3)
            .into_iter()
            .filter_map(|r| match r {
                Region::Ring { k, l } => Some(local_bound_ratio(&w, 20, k, l, 3).unwrap()),
                Region::Inside => None,
            })
            .fold(0.0, f64::max);
        assert!((profile[20 - 8] - max_at_20).abs() < 1e-12);
    }

    #[test]
    fn convolution_matches_fejer_mean() {
        let g = GroupSpec::new(&[2, 3, 2, 2], 4).unwrap();
        let f = Signal::from_fn(&g, |i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
        for n in [1, 5, 13, 24] {
            let conv = convolve(&f, &fejer(&g, n).unwrap()).unwrap();
            assert!(conv.max_abs_diff(&fejer_mean(&f, n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn cache_evicts_least_recent() {
        let w = GroupSpec::walsh(3).unwrap();
        let cache = KernelCache::new(2);
        let a = cache.get(&w, KernelKind::Fejer, 2).unwrap();
        cache.get(&w, KernelKind::Fejer, 3).unwrap();
        cache.get(&w, KernelKind::Fejer, 2).unwrap();
        cache.get(&w, KernelKind::Dirichlet, 5).unwrap();
        assert_eq!(cache.len(), 2);
        let again = cache.get(&w, KernelKind::Fejer, 2).unwrap();
        assert!(Arc::ptr_eq(&a, &again));
    }
}
