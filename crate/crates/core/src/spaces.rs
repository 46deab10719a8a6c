//! `L_p`, weak `L_p`, martingale Hardy spaces and `p`-atoms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::system::{coset_average, max_abs_diff, Signal};

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `integral |f|^p d mu`.
pub fn lp_power(f: &Signal, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_power_slice(f.values(), p))
}

pub(crate) fn lp_power_slice(values: &[Complex64], p: f64) -> f64 {
    let sum: f64 = if p == 1.0 {
        values.iter().map(|v| v.norm()).sum()
    } else if p == 2.0 {
        values.iter().map(|v| v.norm_sqr()).sum()
    } else {
        values.iter().map(|v| v.norm().powf(p)).sum()
    };
    sum / values.len() as f64
}

/// `(integral |f|^p d mu)^{1/p}`; a quasi-norm when `p < 1`.
pub fn lp_norm(f: &Signal, p: f64) -> Result<f64> {
    Ok(lp_power(f, p)?.powf(1.0 / p))
}

/// `sup_l l^p mu{|f| > l}`, evaluated exactly at the jumps of the
/// distribution function.
pub fn weak_lp_power(f: &Signal, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let mut mags: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let total = mags.len() as f64;
    Ok(mags
        .iter()
        .enumerate()
        .map(|(i, v)| v.powf(p) * (i + 1) as f64 / total)
        .fold(0.0, f64::max))
}

pub fn weak_lp_norm(f: &Signal, p: f64) -> Result<f64> {
    Ok(weak_lp_power(f, p)?.powf(1.0 / p))
}

/// The martingale `f^(n) = S_{M_n} f`, `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSeq {
    spec: GroupSpec,
    levels: Vec<Signal>,
}

impl MartingaleSeq {
    pub fn from_signal(f: &Signal) -> Self {
        let spec = f.spec().clone();
        let levels = (0..=spec.level()).map(|n| coset_average(f, n)).collect();
        MartingaleSeq { spec, levels }
    }

    /// Wraps explicit levels after checking adaptedness and the tower
    /// property.
    pub fn from_levels(spec: &GroupSpec, levels: Vec<Signal>) -> Result<Self> {
        if levels.len() != spec.level() + 1 || levels.iter().any(|l| l.spec() != spec) {
            return Err(Error::SpecMismatch);
        }
        let mart = MartingaleSeq {
            spec: spec.clone(),
            levels,
        };
        mart.validate(1e-10)?;
        Ok(mart)
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn levels(&self) -> &[Signal] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &Signal {
        &self.levels[n]
    }

    pub fn last(&self) -> &Signal {
        self.levels.last().unwrap()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for (n, level) in self.levels.iter().enumerate() {
            let scale = tol * level.sup_norm().max(1.0);
            let avg = coset_average(level, n);
            if avg.max_abs_diff(level) > scale {
                return Err(Error::Hypothesis(format!(
                    "level {n} is not constant on I_{n} cosets"
                )));
            }
            if n + 1 < self.levels.len() {
                let down = coset_average(&self.levels[n + 1], n);
                if down.max_abs_diff(level) > scale {
                    return Err(Error::Hypothesis(format!(
                        "tower property fails between levels {n} and {}",
                        n + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `f* = sup_n |f^(n)|`.
pub fn maximal_function(mart: &MartingaleSeq) -> Signal {
    let mut out = vec![0.0f64; mart.spec.size()];
    for level in &mart.levels {
        for (o, v) in out.iter_mut().zip(level.values()) {
            *o = o.max(v.norm());
        }
    }
    Signal::new(&mart.spec, out.into_iter().map(Complex64::from).collect()).unwrap()
}

/// `||f*||_p^p`.
pub fn hp_power(mart: &MartingaleSeq, p: f64) -> Result<f64> {
    lp_power(&maximal_function(mart), p)
}

/// `||f||_{H_p} = ||f*||_p` at the truncation level.
pub fn hp_norm(mart: &MartingaleSeq, p: f64) -> Result<f64> {
    Ok(hp_power(mart, p)?.powf(1.0 / p))
}

/// The coset `I_depth(base)`, with `base` a linear index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub base: usize,
    pub depth: usize,
}

impl Interval {
    pub fn new(spec: &GroupSpec, base: usize, depth: usize) -> Result<Self> {
        if depth > spec.level() {
            return Err(Error::OutOfRange {
                what: "interval depth",
                value: depth,
                limit: spec.level(),
            });
        }
        if base >= spec.size() {
            return Err(Error::OutOfRange {
                what: "base index",
                value: base,
                limit: spec.size() - 1,
            });
        }
        Ok(Interval {
            base: base % spec.power(depth),
            depth,
        })
    }

    pub fn contains(&self, spec: &GroupSpec, x: usize) -> bool {
        spec.same_prefix(x, self.base, self.depth)
    }

    pub fn measure(&self, spec: &GroupSpec) -> f64 {
        1.0 / spec.power(self.depth) as f64
    }
}

/// A `p`-atom: supported in `I`, zero mean, `||a||_inf <= mu(I)^{-1/p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub signal: Signal,
    pub support: Interval,
    pub p: f64,
}

impl Atom {
    /// Wraps a signal, checking all three atom conditions.
    pub fn new(signal: Signal, support: Interval, p: f64) -> Result<Self> {
        let atom = Atom { signal, support, p };
        atom.validate()?;
        Ok(atom)
    }

    /// `mu(I)^{-1/p}`.
    pub fn size_bound(&self) -> f64 {
        (self.signal.spec().power(self.support.depth) as f64).powf(1.0 / self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidExponent(self.p));
        }
        let spec = self.signal.spec();
        if let Some(x) = self
            .signal
            .values()
            .iter()
            .enumerate()
            .position(|(x, v)| *v != Complex64::new(0.0, 0.0) && !self.support.contains(spec, x))
        {
            return Err(Error::SupportViolation(format!(
                "nonzero value at index {x} outside I_{}",
                self.support.depth
            )));
        }
        let sup = self.signal.sup_norm();
        let integral = self.signal.mean().norm();
        if integral > 1e-12 * (sup * self.support.measure(spec)).max(1.0) {
            return Err(Error::InvalidAtom(format!("integral {integral:e} is not zero")));
        }
        let bound = self.size_bound();
        if sup > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidAtom(format!(
                "sup norm {sup} exceeds mu(I)^(-1/p) = {bound}"
            )));
        }
        Ok(())
    }
}

/// Projects `raw` to zero mean on `support` and rescales it so that
/// `||a||_inf = mu(I)^{-1/p}`.
pub fn make_atom(raw: &Signal, support: Interval, p: f64) -> Result<Atom> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let spec = raw.spec();
    if support.depth > spec.level() {
        return Err(Error::OutOfRange {
            what: "interval depth",
            value: support.depth,
            limit: spec.level(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut sum = zero;
    let mut count = 0usize;
    for (x, v) in raw.values().iter().enumerate() {
        if support.contains(spec, x) {
            sum += v;
            count += 1;
        } else if *v != zero {
            return Err(Error::SupportViolation(format!(
                "raw data is nonzero at index {x} outside I_{}",
                support.depth
            )));
        }
    }
    let mean = sum / count as f64;
    let mut values: Vec<Complex64> = raw
        .values()
        .iter()
        .enumerate()
        .map(|(x, v)| if support.contains(spec, x) { v - mean } else { zero })
        .collect();
    let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = raw.sup_norm().max(f64::MIN_POSITIVE);
    if sup <= 1e-12 * scale {
        return Err(Error::DegenerateAtom);
    }
    let bound = (spec.power(support.depth) as f64).powf(1.0 / p);
    for v in &mut values {
        *v *= bound / sup;
    }
    Atom::new(Signal::new(spec, values)?, support, p)
}

/// Reproducible description of a random atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub support_base: Vec<u32>,
    pub depth: usize,
    pub p: f64,
    pub seed: u64,
}

impl AtomSpec {
    /// Digits below `depth + 2` carry independent standard normal values on
    /// the support; the atom is then the normalized projection of that data.
    /// Higher digits are ignored, so the same spec gives the same function
    /// at every truncation level deep enough to hold it.
    pub fn realize(&self, spec: &GroupSpec) -> Result<Atom> {
        if self.depth > spec.level() {
            return Err(Error::OutOfRange {
                what: "atom depth",
                value: self.depth,
                limit: spec.level(),
            });
        }
        if self.support_base.len() < self.depth {
            return Err(Error::Config(format!(
                "support base has {} digits, need {}",
                self.support_base.len(),
                self.depth
            )));
        }
        let base = spec.index_of(
            &self.support_base[..self.depth]
                .iter()
                .copied()
                .chain(std::iter::repeat_n(0, spec.level() - self.depth))
                .collect::<Vec<_>>(),
        )?;
        let support = Interval::new(spec, base, self.depth)?;
        let resolution = spec.power((self.depth + 2).min(spec.level()));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise: Vec<f64> = (0..resolution).map(|_| rng.sample(StandardNormal)).collect();
        // normalize on the noise grid itself so the result is bit-identical
        // at every level
        let cells: Vec<usize> = (0..resolution)
            .filter(|&y| support.contains(spec, y))
            .collect();
        let mean = cells.iter().map(|&y| noise[y]).sum::<f64>() / cells.len() as f64;
        let sup = cells
            .iter()
            .map(|&y| (noise[y] - mean).abs())
            .fold(0.0, f64::max);
        if sup == 0.0 {
            return Err(Error::DegenerateAtom);
        }
        let bound = (spec.power(self.depth) as f64).powf(1.0 / self.p);
        let signal = Signal::from_fn(spec, |x| {
            if support.contains(spec, x) {
                Complex64::new((noise[x % resolution] - mean) * (bound / sup), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Atom::new(signal, support, self.p)
    }
}

/// `count` random atom specs with depths in `1..=max_depth` and uniformly
/// chosen support cosets.
pub fn generate_suite(
    spec: &GroupSpec,
    count: usize,
    max_depth: usize,
    p: f64,
    seed: u64,
) -> Result<Vec<AtomSpec>> {
    if max_depth == 0 || max_depth > spec.level() {
        return Err(Error::OutOfRange {
            what: "maximal atom depth",
            value: max_depth,
            limit: spec.level(),
        });
    }
    check_exponent(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let depth = rng.gen_range(1..=max_depth);
            let support_base = (0..depth).map(|k| rng.gen_range(0..spec.radix(k))).collect();
            AtomSpec {
                support_base,
                depth,
                p,
                seed: rng.gen(),
            }
        })
        .collect())
}

/// Outcome of checking `sum_k mu_k S_{M_n} a_k = f^(n)` at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// Largest pointwise error over all levels.
    pub max_level_error: f64,
    /// `max |f^(N)|`, the scale the error should be judged against.
    pub scale: f64,
    /// `sum |mu_k|^p`.
    pub weight_sum: f64,
    /// `||f||_{H_p}^p`.
    pub hp_power: f64,
    /// `hp_power / weight_sum`.
    pub ratio: f64,
}

impl DecompositionReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_level_error <= tol * self.scale.max(1.0)
    }
}

pub fn verify_decomposition(
    mart: &MartingaleSeq,
    weights: &[f64],
    atoms: &[Atom],
    p: f64,
) -> Result<DecompositionReport> {
    check_exponent(p)?;
    if weights.len() != atoms.len() {
        return Err(Error::Config(format!(
            "{} weights for {} atoms",
            weights.len(),
            atoms.len()
        )));
    }
    let spec = mart.spec();
    if atoms.iter().any(|a| a.signal.spec() != spec) {
        return Err(Error::SpecMismatch);
    }
    let mut max_level_error = 0.0f64;
    for n in 0..=spec.level() {
        let mut acc = vec![Complex64::new(0.0, 0.0); spec.size()];
        for (mu, atom) in weights.iter().zip(atoms) {
            let level = coset_average(&atom.signal, n);
            for (a, v) in acc.iter_mut().zip(level.values()) {
                *a += v * mu;
            }
        }
        max_level_error = max_level_error.max(max_abs_diff(&acc, mart.level(n).values()));
    }
    let weight_sum: f64 = weights.iter().map(|m| m.abs().powf(p)).sum();
    let hp = hp_power(mart, p)?;
    Ok(DecompositionReport {
        max_level_error,
        scale: mart.last().sup_norm(),
        weight_sum,
        hp_power: hp,
        ratio: hp / weight_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{forward_naive, partial_sum};
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn noise(spec: &GroupSpec, seed: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::from_fn(spec, |_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
    }

    #[test]
    fn lp_examples() {
        let w = GroupSpec::walsh(4).unwrap();
        let k = Signal::constant(&w, Complex64::new(3.0, -4.0));
        for p in [0.25, 0.5, 1.0, 2.0, 3.5] {
            assert_relative_eq!(lp_norm(&k, p).unwrap(), 5.0, max_relative = 1e-12);
        }
        let ind = Signal::indicator(&w, 0, 1);
        for p in [0.5, 1.0, 2.0] {
            assert_relative_eq!(lp_norm(&ind, p).unwrap(), 0.5f64.powf(1.0 / p), max_relative = 1e-12);
        }
        assert!(matches!(lp_norm(&ind, 0.0), Err(Error::InvalidExponent(_))));
        assert!(lp_norm(&ind, -1.0).is_err());
    }

    #[test]
    fn parseval() {
        let g = GroupSpec::new(&[2, 3, 4], 3).unwrap();
        let f = noise(&g, 3);
        let energy: f64 = forward_naive(&f).coeffs().iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(lp_power(&f, 2.0).unwrap(), energy, max_relative = 1e-12);
    }

    #[test]
    fn weak_examples() {
        let w = GroupSpec::walsh(4).unwrap();
        let ind = Signal::indicator(&w, 0, 1);
        assert_relative_eq!(weak_lp_norm(&ind, 0.5).unwrap(), 0.25, max_relative = 1e-12);
        assert_eq!(weak_lp_norm(&Signal::zeros(&w), 0.5).unwrap(), 0.0);
        for seed in 0..10 {
            let f = noise(&w, seed);
            for p in [0.25, 0.5, 1.0, 2.0] {
                assert!(weak_lp_norm(&f, p).unwrap() <= lp_norm(&f, p).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn weak_matches_threshold_scan() {
        let w = GroupSpec::walsh(3).unwrap();
        let f = Signal::new(&w, [3.0, 1.0, 1.0, 2.0, 0.0, 1.0, 3.0, 0.5].map(c).to_vec()).unwrap();
        let p = 0.7;
        let mut best = 0.0f64;
        for v in f.values() {
            let l = v.norm();
            let m = f.values().iter().filter(|u| u.norm() >= l).count() as f64 / 8.0;
            best = best.max(l.powf(p) * m);
        }
        assert_relative_eq!(weak_lp_power(&f, p).unwrap(), best, max_relative = 1e-14);
    }

    #[test]
    fn quasi_triangle() {
        let g = GroupSpec::new(&[3, 2, 2, 3], 4).unwrap();
        for seed in 0..10 {
            let f = noise(&g, seed);
            let h = noise(&g, seed + 100);
            let sum = f.add(&h).unwrap();
            for p in [0.25, 0.5, 0.9] {
                let lhs = lp_power(&sum, p).unwrap();
                let rhs = lp_power(&f, p).unwrap() + lp_power(&h, p).unwrap();
                assert!(lhs <= rhs + 1e-10);
            }
        }
    }

    #[test]
    fn martingale_properties() {
        let g = GroupSpec::new(&[2, 3, 2, 2], 4).unwrap();
        let f = noise(&g, 7);
        let mart = MartingaleSeq::from_signal(&f);
        mart.validate(1e-10).unwrap();
        assert!(mart.last().max_abs_diff(&f) < 1e-12);
        for n in 0..=g.level() {
            let s = partial_sum(&f, g.power(n)).unwrap();
            assert!(s.max_abs_diff(mart.level(n)) < 1e-10);
        }
        let mut bad = mart.levels().to_vec();
        bad[1] = f.clone();
        assert!(MartingaleSeq::from_levels(&g, bad).is_err());
        assert!(MartingaleSeq::from_levels(&g, mart.levels().to_vec()).is_ok());
    }

    #[test]
    fn maximal_function_matches_coset_sup() {
        let g = GroupSpec::new(&[2, 3, 2], 3).unwrap();
        let f = noise(&g, 11);
        let star = maximal_function(&MartingaleSeq::from_signal(&f));
        for x in 0..g.size() {
            let mut best = 0.0f64;
            for n in 0..=g.level() {
                let idx: Vec<usize> = g.interval_indices(x, n).collect();
                let avg: Complex64 =
                    idx.iter().map(|&t| f.values()[t]).sum::<Complex64>() / idx.len() as f64;
                best = best.max(avg.norm());
            }
            assert!((star.values()[x].re - best).abs() < 1e-10);
            assert!(star.values()[x].re >= f.values()[x].norm() - 1e-12);
        }
        let k = Signal::constant(&g, c(-2.0));
        let mart = MartingaleSeq::from_signal(&k);
        assert_relative_eq!(hp_norm(&mart, 0.5).unwrap(), 2.0, max_relative = 1e-12);
        let mart = MartingaleSeq::from_signal(&f);
        assert!(hp_norm(&mart, 0.5).unwrap() >= lp_norm(&f, 0.5).unwrap());
    }

    #[test]
    fn atom_example() {
        let w = GroupSpec::walsh(2).unwrap();
        let raw = Signal::new(&w, [1.0, 0.0, -1.0, 0.0].map(c).to_vec()).unwrap();
        let support = Interval::new(&w, 0, 1).unwrap();
        let a = make_atom(&raw, support, 0.5).unwrap();
        assert_eq!(a.signal.values(), &[c(4.0), c(0.0), c(-4.0), c(0.0)]);
        assert_eq!(a.size_bound(), 4.0);

        let leak = Signal::new(&w, [1.0, 1.0, -1.0, 0.0].map(c).to_vec()).unwrap();
        assert!(matches!(make_atom(&leak, support, 0.5), Err(Error::SupportViolation(_))));
        let flat = Signal::new(&w, [2.0, 0.0, 2.0, 0.0].map(c).to_vec()).unwrap();
        assert_eq!(make_atom(&flat, support, 0.5), Err(Error::DegenerateAtom));
    }

    #[test]
    fn atoms_validate_and_scaled_fail() {
        let g = GroupSpec::new(&[2, 3, 2, 2, 3], 5).unwrap();
        for s in generate_suite(&g, 30, 3, 0.5, 1).unwrap() {
            let a = s.realize(&g).unwrap();
            a.validate().unwrap();
            assert!(a.signal.mean().norm() < 1e-12 * a.size_bound());
            assert_relative_eq!(a.signal.sup_norm(), a.size_bound(), max_relative = 1e-12);
            let big = Atom {
                signal: a.signal.scale(c(1.01)),
                ..a.clone()
            };
            assert!(matches!(big.validate(), Err(Error::InvalidAtom(_))));
        }
    }

    #[test]
    fn realized_atoms_do_not_depend_on_level() {
        let small = GroupSpec::walsh(6).unwrap();
        let large = GroupSpec::walsh(8).unwrap();
        for s in generate_suite(&small, 10, 4, 0.5, 5).unwrap() {
            let a = s.realize(&small).unwrap();
            let b = s.realize(&large).unwrap();
            for x in 0..large.size() {
                assert_eq!(a.signal.values()[x % small.size()], b.signal.values()[x]);
            }
        }
    }

    #[test]
    fn suite_json_round_trip() {
        let w = GroupSpec::walsh(6).unwrap();
        let suite = generate_suite(&w, 5, 4, 0.25, 9).unwrap();
        let text = serde_json::to_string(&suite).unwrap();
        let back: Vec<AtomSpec> = serde_json::from_str(&text).unwrap();
        assert_eq!(suite, back);
        assert_eq!(suite, generate_suite(&w, 5, 4, 0.25, 9).unwrap());
    }

    #[test]
    fn decomposition_single_atom() {
        let g = GroupSpec::new(&[2, 3, 2, 2], 4).unwrap();
        let a = AtomSpec {
            support_base: vec![1, 2],
            depth: 2,
            p: 0.5,
            seed: 4,
        }
        .realize(&g)
        .unwrap();
        let mart = MartingaleSeq::from_signal(&a.signal);
        let r = verify_decomposition(&mart, &[1.0], std::slice::from_ref(&a), 0.5).unwrap();
        assert!(r.holds(1e-9));
        assert_eq!(r.weight_sum, 1.0);
        assert!(r.ratio.is_finite());
        let other = GroupSpec::walsh(4).unwrap();
        let m2 = MartingaleSeq::from_signal(&Signal::zeros(&other));
        assert_eq!(
            verify_decomposition(&m2, &[1.0], &[a], 0.5),
            Err(Error::SpecMismatch)
        );
    }
}
