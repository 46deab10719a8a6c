//! Generalized Rademacher functions, the Vilenkin character system and the
//! Vilenkin–Fourier transform.
//!
//! Normalization: the forward transform carries `1/M_N`, synthesis carries
//! no factor, matching integration against the Haar probability measure.

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Phase tables are used while the lcm of the radices stays below this.
const PHASE_TABLE_LIMIT: u64 = 1 << 20;

/// `exp(2 pi i j / m)`, exact at quarter turns.
pub fn unit_root(m: u32, j: u64) -> Complex64 {
    let m = m as u64;
    let j = j % m;
    if (4 * j).is_multiple_of(m) {
        match 4 * j / m {
            0 => ONE,
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, TAU * j as f64 / m as f64)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Evaluator for the characters `psi_n` of a truncated group.
///
/// When the lcm `L` of the radices is small, `psi_n(x)` is read from a table
/// of `L`-th roots of unity indexed by the exact integer phase
/// `sum_k (n_k x_k mod m_k) L/m_k mod L`.
#[derive(Debug, Clone)]
pub struct Characters {
    spec: GroupSpec,
    lcm: Option<u64>,
    roots: Vec<Complex64>,
}

impl Characters {
    pub fn new(spec: &GroupSpec) -> Self {
        let mut lcm = 1u64;
        let mut small = true;
        for &r in spec.radices() {
            lcm = lcm / gcd(lcm, r as u64) * r as u64;
            if lcm > PHASE_TABLE_LIMIT {
                small = false;
                break;
            }
        }
        let (lcm, roots) = if small {
            let roots = (0..lcm).map(|j| unit_root(lcm as u32, j)).collect();
            (Some(lcm), roots)
        } else {
            (None, Vec::new())
        };
        Characters {
            spec: spec.clone(),
            lcm,
            roots,
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    /// `psi_n(x)` on linear indices.
    pub fn value(&self, n: usize, x: usize) -> Complex64 {
        let spec = &self.spec;
        match self.lcm {
            Some(l) => {
                let mut phase = 0u64;
                for k in 0..spec.level() {
                    let r = spec.radix(k) as u64;
                    let nk = spec.digit(n, k) as u64;
                    if nk != 0 {
                        let xk = spec.digit(x, k) as u64;
                        phase += (nk * xk % r) * (l / r);
                    }
                }
                self.roots[(phase % l) as usize]
            }
            None => {
                let mut v = ONE;
                for k in 0..spec.level() {
                    let nk = spec.digit(n, k) as u64;
                    if nk != 0 {
                        v *= unit_root(spec.radix(k), nk * spec.digit(x, k) as u64);
                    }
                }
                v
            }
        }
    }

    /// `psi_n` evaluated at every coset, built axis by axis in `O(M_N)`.
    pub fn row(&self, n: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.spec.size());
        self.row_into(n, &mut out);
        out
    }

    pub fn row_into(&self, n: usize, out: &mut Vec<Complex64>) {
        let spec = &self.spec;
        match self.lcm {
            Some(l) => {
                let mut phases: Vec<u64> = Vec::with_capacity(spec.size());
                phases.push(0);
                for k in 0..spec.level() {
                    let r = spec.radix(k) as u64;
                    let nk = spec.digit(n, k) as u64;
                    let len = phases.len();
                    for d in 1..r {
                        let step = (nk * d % r) * (l / r);
                        for i in 0..len {
                            let p = phases[i] + step;
                            phases.push(if p >= l { p - l } else { p });
                        }
                    }
                }
                out.clear();
                out.extend(phases.iter().map(|&p| self.roots[p as usize]));
            }
            None => {
                out.clear();
                out.push(ONE);
                for k in 0..spec.level() {
                    let r = spec.radix(k);
                    let nk = spec.digit(n, k) as u64;
                    let len = out.len();
                    for d in 1..r as u64 {
                        let w = unit_root(r, nk * d);
                        for i in 0..len {
                            let v = out[i] * w;
                            out.push(v);
                        }
                    }
                }
            }
        }
    }
}

/// Generalized Rademacher function `r_k(x) = exp(2 pi i x_k / m_k)`.
pub fn rademacher(k: usize, x: &Point) -> Result<Complex64> {
    let spec = x.spec();
    if k >= spec.level() {
        return Err(Error::OutOfRange {
            what: "Rademacher position",
            value: k,
            limit: spec.level(),
        });
    }
    Ok(unit_root(spec.radix(k), x.digit(k) as u64))
}

/// `sum_{k < m_n} r_n(x)^k`: `m_n` when `x_n = 0`, else zero.
pub fn rademacher_sum(n: usize, x: &Point) -> Result<Complex64> {
    let spec = x.spec();
    if n >= spec.level() {
        return Err(Error::OutOfRange {
            what: "Rademacher position",
            value: n,
            limit: spec.level(),
        });
    }
    let m = spec.radix(n);
    Ok((0..m as u64)
        .map(|k| unit_root(m, k * x.digit(n) as u64))
        .sum())
}

/// Vilenkin character `psi_n(x) = prod_k r_k(x)^{n_k}`.
pub fn vilenkin_char(n: usize, x: &Point) -> Result<Complex64> {
    let spec = x.spec();
    if n >= spec.size() {
        return Err(Error::OutOfRange {
            what: "character index",
            value: n,
            limit: spec.size(),
        });
    }
    let mut v = ONE;
    for k in 0..spec.level() {
        let nk = spec.digit(n, k) as u64;
        v *= unit_root(spec.radix(k), nk * x.digit(k) as u64);
    }
    Ok(v)
}

/// An `F_N`-measurable function, one complex value per coset of `I_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    spec: GroupSpec,
    values: Vec<Complex64>,
}

impl Signal {
    pub fn new(spec: &GroupSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.size() {
            return Err(Error::OutOfRange {
                what: "signal length",
                value: values.len(),
                limit: spec.size(),
            });
        }
        Ok(Signal {
            spec: spec.clone(),
            values,
        })
    }

    pub fn zeros(spec: &GroupSpec) -> Self {
        Signal {
            spec: spec.clone(),
            values: vec![ZERO; spec.size()],
        }
    }

    pub fn constant(spec: &GroupSpec, c: Complex64) -> Self {
        Signal {
            spec: spec.clone(),
            values: vec![c; spec.size()],
        }
    }

    pub fn from_fn(spec: &GroupSpec, f: impl FnMut(usize) -> Complex64) -> Self {
        Signal {
            spec: spec.clone(),
            values: (0..spec.size()).map(f).collect(),
        }
    }

    /// Indicator of `I_depth(x)`.
    pub fn indicator(spec: &GroupSpec, x: usize, depth: usize) -> Self {
        Self::from_fn(spec, |i| {
            if spec.same_prefix(i, x, depth) {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// The character `psi_n` as a signal.
    pub fn character(spec: &GroupSpec, n: usize) -> Self {
        Signal {
            spec: spec.clone(),
            values: Characters::new(spec).row(n),
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, x: &Point) -> Complex64 {
        self.values[x.index()]
    }

    pub fn scale(&self, c: Complex64) -> Signal {
        Signal {
            spec: self.spec.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(Signal {
            spec: self.spec.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.add(&other.scale(-ONE))
    }

    /// `max |f - g|`.
    pub fn max_abs_diff(&self, other: &Signal) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Integral against the Haar measure.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// Writes `index,re,im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_complex_csv(path, &self.values)
    }

    pub fn read_csv(spec: &GroupSpec, path: &Path) -> Result<Self> {
        Signal::new(spec, read_complex_csv(spec.size(), path)?)
    }
}

/// Vilenkin–Fourier coefficients `f^(0..M_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    spec: GroupSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(spec: &GroupSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.size() {
            return Err(Error::OutOfRange {
                what: "spectrum length",
                value: coeffs.len(),
                limit: spec.size(),
            });
        }
        Ok(Spectrum {
            spec: spec.clone(),
            coeffs,
        })
    }

    /// Unit coefficient at `n`, zero elsewhere.
    pub fn delta(spec: &GroupSpec, n: usize) -> Self {
        let mut coeffs = vec![ZERO; spec.size()];
        coeffs[n] = ONE;
        Spectrum {
            spec: spec.clone(),
            coeffs,
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        max_abs_diff(&self.coeffs, &other.coeffs)
    }

    /// Coefficients multiplied pointwise by real weights.
    pub fn weighted(&self, weight: impl Fn(usize) -> f64) -> Spectrum {
        Spectrum {
            spec: self.spec.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * weight(k))
                .collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_complex_csv(path, &self.coeffs)
    }

    pub fn read_csv(spec: &GroupSpec, path: &Path) -> Result<Self> {
        Spectrum::new(spec, read_complex_csv(spec.size(), path)?)
    }
}

pub(crate) fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn write_complex_csv(path: &Path, values: &[Complex64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "re", "im"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_complex_csv(len: usize, path: &Path) -> Result<Vec<Complex64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut values = vec![ZERO; len];
    let mut seen = vec![false; len];
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Config(format!("short csv row {rec:?}")))
        };
        let bad = |s: &str| Error::Config(format!("bad csv value {s:?}"));
        let idx: usize = field(0)?.trim().parse().map_err(|_| bad(field(0).unwrap()))?;
        let re: f64 = field(1)?.trim().parse().map_err(|_| bad(field(1).unwrap()))?;
        let im: f64 = field(2)?.trim().parse().map_err(|_| bad(field(2).unwrap()))?;
        if idx >= len {
            return Err(Error::OutOfRange {
                what: "csv index",
                value: idx,
                limit: len,
            });
        }
        values[idx] = Complex64::new(re, im);
        seen[idx] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Config(format!("csv is missing index {missing}")));
    }
    Ok(values)
}

/// `f^(n) = (1/M_N) sum_x f(x) conj(psi_n(x))`, one character row at a time.
/// Quadratic reference implementation.
pub fn forward_naive(f: &Signal) -> Spectrum {
    let spec = f.spec();
    let chars = Characters::new(spec);
    let scale = 1.0 / spec.size() as f64;
    let mut row = Vec::with_capacity(spec.size());
    let coeffs = (0..spec.size())
        .map(|n| {
            chars.row_into(n, &mut row);
            let s: Complex64 = f
                .values()
                .iter()
                .zip(&row)
                .map(|(v, c)| v * c.conj())
                .sum();
            s * scale
        })
        .collect();
    Spectrum {
        spec: spec.clone(),
        coeffs,
    }
}

/// Synthesis `sum_n c_n psi_n(x)` evaluated directly. Quadratic reference.
pub fn inverse_naive(s: &Spectrum) -> Signal {
    let spec = s.spec();
    let chars = Characters::new(spec);
    let mut values = vec![ZERO; spec.size()];
    let mut row = Vec::with_capacity(spec.size());
    for (n, c) in s.coeffs().iter().enumerate() {
        if *c == ZERO {
            continue;
        }
        chars.row_into(n, &mut row);
        for (v, r) in values.iter_mut().zip(&row) {
            *v += c * r;
        }
    }
    Signal {
        spec: spec.clone(),
        values,
    }
}

/// Applies a length-`m_k` DFT along every digit axis.
///
/// Digit `k` of the linear index lives at stride `M_k`, so the character
/// transform factors into independent small DFTs per axis. `sign` is the
/// exponent sign of the kernel.
fn axis_transform(spec: &GroupSpec, data: &mut [Complex64], sign: i64) {
    let size = spec.size();
    let mut scratch: Vec<Complex64> = Vec::new();
    let mut buf: Vec<Complex64> = Vec::new();
    for k in 0..spec.level() {
        let m = spec.radix(k) as usize;
        let stride = spec.power(k);
        let block = stride * m;
        if m == 2 {
            for start in (0..size).step_by(block) {
                for j in start..start + stride {
                    let a = data[j];
                    let b = data[j + stride];
                    data[j] = a + b;
                    data[j + stride] = a - b;
                }
            }
            continue;
        }
        let twiddles: Vec<Complex64> = (0..m as u64)
            .map(|j| {
                let j = if sign < 0 { (m as u64 - j) % m as u64 } else { j };
                unit_root(m as u32, j)
            })
            .collect();
        scratch.resize(m, ZERO);
        buf.resize(m, ZERO);
        for start in (0..size).step_by(block) {
            for j in start..start + stride {
                for d in 0..m {
                    buf[d] = data[j + d * stride];
                }
                for (out, slot) in scratch.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for (d, v) in buf.iter().enumerate() {
                        acc += v * twiddles[(out * d) % m];
                    }
                    *slot = acc;
                }
                for d in 0..m {
                    data[j + d * stride] = scratch[d];
                }
            }
        }
    }
}

/// Fast forward transform, `O(M_N sum_k m_k)`.
pub fn forward_fast(f: &Signal) -> Spectrum {
    let spec = f.spec();
    let mut data = f.values().to_vec();
    axis_transform(spec, &mut data, -1);
    let scale = 1.0 / spec.size() as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    Spectrum {
        spec: spec.clone(),
        coeffs: data,
    }
}

/// Fast synthesis `f = sum_n f^(n) psi_n`.
pub fn inverse(s: &Spectrum) -> Signal {
    let mut data = s.coeffs().to_vec();
    axis_transform(s.spec(), &mut data, 1);
    Signal {
        spec: s.spec().clone(),
        values: data,
    }
}

fn check_count(spec: &GroupSpec, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptySum);
    }
    if n > spec.size() {
        return Err(Error::OutOfRange {
            what: "partial sum order",
            value: n,
            limit: spec.size(),
        });
    }
    Ok(())
}

/// `S_n f = sum_{k<n} f^(k) psi_k`.
pub fn partial_sum(f: &Signal, n: usize) -> Result<Signal> {
    check_count(f.spec(), n)?;
    partial_sum_of(&forward_fast(f), n)
}

pub fn partial_sum_of(s: &Spectrum, n: usize) -> Result<Signal> {
    check_count(s.spec(), n)?;
    Ok(inverse(&s.weighted(|k| if k < n { 1.0 } else { 0.0 })))
}

/// Triangular weight `(n - k)/n` of coefficient `k` in the Fejer mean.
pub fn fejer_weight(n: usize, k: usize) -> f64 {
    if k < n {
        (n - k) as f64 / n as f64
    } else {
        0.0
    }
}

/// `sigma_n f = (1/n) sum_{k=1}^n S_k f`, via triangular spectral weights.
pub fn fejer_mean(f: &Signal, n: usize) -> Result<Signal> {
    check_count(f.spec(), n)?;
    fejer_mean_of(&forward_fast(f), n)
}

pub fn fejer_mean_of(s: &Spectrum, n: usize) -> Result<Signal> {
    check_count(s.spec(), n)?;
    Ok(inverse(&s.weighted(|k| fejer_weight(n, k))))
}

/// Average of `f` over the coset `I_depth(x)` containing each point.
pub fn coset_average(f: &Signal, depth: usize) -> Signal {
    let spec = f.spec();
    let p = spec.power(depth);
    let count = spec.size() / p;
    let mut sums = vec![ZERO; p];
    for (i, v) in f.values().iter().enumerate() {
        sums[i % p] += v;
    }
    Signal::from_fn(spec, |i| sums[i % p] / count as f64)
}

/// Running evaluation of `S_k f` and `sigma_k f` for `k = 1, 2, ...`.
///
/// Each step adds one character row, `O(M_N)` per `k`.
pub struct MeanSweep<'a> {
    spectrum: &'a Spectrum,
    chars: Characters,
    k: usize,
    partial: Vec<Complex64>,
    cumulative: Vec<Complex64>,
    mean: Vec<Complex64>,
    row: Vec<Complex64>,
}

impl<'a> MeanSweep<'a> {
    pub fn new(spectrum: &'a Spectrum) -> Self {
        let size = spectrum.spec().size();
        MeanSweep {
            chars: Characters::new(spectrum.spec()),
            spectrum,
            k: 0,
            partial: vec![ZERO; size],
            cumulative: vec![ZERO; size],
            mean: vec![ZERO; size],
            row: Vec::with_capacity(size),
        }
    }

    /// Moves to the next `k`; returns it, or `None` past `M_N`.
    pub fn advance(&mut self) -> Option<usize> {
        if self.k >= self.spectrum.spec().size() {
            return None;
        }
        let c = self.spectrum.coeffs()[self.k];
        if c != ZERO {
            self.chars.row_into(self.k, &mut self.row);
            for (p, r) in self.partial.iter_mut().zip(&self.row) {
                *p += c * r;
            }
        }
        self.k += 1;
        let inv = 1.0 / self.k as f64;
        for ((u, p), m) in self
            .cumulative
            .iter_mut()
            .zip(&self.partial)
            .zip(self.mean.iter_mut())
        {
            *u += p;
            *m = *u * inv;
        }
        Some(self.k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `S_k f` at the current `k`.
    pub fn partial(&self) -> &[Complex64] {
        &self.partial
    }

    /// `sigma_k f` at the current `k`.
    pub fn mean(&self) -> &[Complex64] {
        &self.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(spec: &GroupSpec, seed: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::from_fn(spec, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn rademacher_values() {
        let g = GroupSpec::new(&[2, 3, 4], 3).unwrap();
        let x = g.point_from_digits(&[1, 1, 0]).unwrap();
        assert_eq!(rademacher(2, &x).unwrap(), ONE);
        assert_eq!(rademacher(0, &x).unwrap(), Complex64::new(-1.0, 0.0));
        let r = rademacher(1, &x).unwrap();
        assert_abs_diff_eq!(r.re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert!(rademacher(3, &x).is_err());
    }

    #[test]
    fn rademacher_sums() {
        let g = GroupSpec::new(&[2, 3, 4], 3).unwrap();
        let x = g.point_from_digits(&[1, 0, 2]).unwrap();
        assert!((rademacher_sum(1, &x).unwrap() - 3.0).norm() < 1e-12);
        assert!(rademacher_sum(0, &x).unwrap().norm() < 1e-12);
        assert!(rademacher_sum(2, &x).unwrap().norm() < 1e-12);
    }

    #[test]
    fn character_values() {
        let w = GroupSpec::walsh(3).unwrap();
        for x in w.points() {
            assert_eq!(vilenkin_char(0, &x).unwrap(), ONE);
        }
        for n in 0..8 {
            assert_eq!(vilenkin_char(n, &w.zero()).unwrap(), ONE);
        }
        let x = w.point_from_digits(&[1, 1, 0]).unwrap();
        assert_eq!(vilenkin_char(3, &x).unwrap(), ONE);
    }

    #[test]
    fn table_paths_agree() {
        for spec in [
            GroupSpec::new(&[2, 3, 4, 5], 4).unwrap(),
            GroupSpec::walsh(5).unwrap(),
        ] {
            let chars = Characters::new(&spec);
            for n in 0..spec.size() {
                let row = chars.row(n);
                for x in spec.points() {
                    let direct = vilenkin_char(n, &x).unwrap();
                    assert!((row[x.index()] - direct).norm() < 1e-12);
                    assert!((chars.value(n, x.index()) - direct).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn large_lcm_falls_back_to_products() {
        let spec = GroupSpec::new(&[1031, 1033], 2).unwrap();
        let chars = Characters::new(&spec);
        assert!(chars.lcm.is_none());
        let x = spec.point(1500).unwrap();
        let direct = vilenkin_char(777, &x).unwrap();
        assert!((chars.value(777, 1500) - direct).norm() < 1e-12);
        assert!((chars.row(777)[1500] - direct).norm() < 1e-12);
    }

    #[test]
    fn naive_examples() {
        let w = GroupSpec::walsh(3).unwrap();
        let s = forward_naive(&Signal::constant(&w, ONE));
        assert_abs_diff_eq!(s.coeffs()[0].re, 1.0, epsilon = 1e-15);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));

        let s = forward_naive(&Signal::character(&w, 5));
        for (n, c) in s.coeffs().iter().enumerate() {
            let expect = if n == 5 { 1.0 } else { 0.0 };
            assert!((c - expect).norm() < 1e-15);
        }

        let w2 = GroupSpec::walsh(2).unwrap();
        let s = forward_naive(&Signal::indicator(&w2, 0, 1));
        let expect = [0.5, 0.5, 0.0, 0.0];
        for (c, e) in s.coeffs().iter().zip(expect) {
            assert!((c - e).norm() < 1e-15);
        }
    }

    #[test]
    fn fast_matches_naive() {
        for (i, spec) in [
            GroupSpec::walsh(6).unwrap(),
            GroupSpec::new(&[2, 3, 4, 3], 4).unwrap(),
            GroupSpec::new(&[5, 7, 2], 3).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let f = random_signal(spec, i as u64);
            assert!(forward_fast(&f).max_abs_diff(&forward_naive(&f)) < 1e-12);
        }
    }

    #[test]
    fn walsh_fast_is_normalized_hadamard() {
        let w = GroupSpec::walsh(4).unwrap();
        let f = random_signal(&w, 7);
        let s = forward_fast(&f);
        for n in 0..16usize {
            let mut acc = ZERO;
            for x in 0..16usize {
                let sign = if (n & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += f.values()[x] * sign;
            }
            assert!((s.coeffs()[n] - acc / 16.0).norm() < 1e-14);
        }
    }

    #[test]
    fn inverse_examples() {
        let g = GroupSpec::new(&[2, 3, 2], 3).unwrap();
        let f = inverse(&Spectrum::delta(&g, 0));
        assert!(f.values().iter().all(|v| (v - ONE).norm() < 1e-15));
        let f = inverse(&Spectrum::delta(&g, 7));
        assert!(f.max_abs_diff(&Signal::character(&g, 7)) < 1e-14);
        let f = random_signal(&g, 3);
        assert!(inverse(&forward_fast(&f)).max_abs_diff(&f) < 1e-12);
        let s = forward_fast(&f);
        assert!(inverse(&s).max_abs_diff(&inverse_naive(&s)) < 1e-12);
    }

    #[test]
    fn partial_sum_rules() {
        let g = GroupSpec::new(&[2, 3, 2, 3], 4).unwrap();
        let f = random_signal(&g, 11);
        assert_eq!(partial_sum(&f, 0), Err(Error::EmptySum));
        assert!(partial_sum(&f, g.size() + 1).is_err());
        let s1 = partial_sum(&f, 1).unwrap();
        let mean = f.mean();
        assert!(s1.values().iter().all(|v| (v - mean).norm() < 1e-12));
        assert!(partial_sum(&f, g.size()).unwrap().max_abs_diff(&f) < 1e-12);
        for n in 0..=g.level() {
            let s = partial_sum(&f, g.power(n)).unwrap();
            assert!(s.max_abs_diff(&coset_average(&f, n)) < 1e-12);
        }
    }

    fn fejer_direct(f: &Signal, n: usize) -> Signal {
        let mut acc = Signal::zeros(f.spec());
        for k in 1..=n {
            acc = acc.add(&partial_sum(f, k).unwrap()).unwrap();
        }
        acc.scale(Complex64::new(1.0 / n as f64, 0.0))
    }

    #[test]
    fn fejer_weights_match_average() {
        let g = GroupSpec::new(&[2, 3, 2, 2, 3], 5).unwrap();
        for seed in 0..3 {
            let f = random_signal(&g, seed);
            for n in 1..=64 {
                let fast = fejer_mean(&f, n).unwrap();
                assert!(fast.max_abs_diff(&fejer_direct(&f, n)) < 1e-10);
            }
        }
        let f = random_signal(&g, 9);
        assert!(fejer_mean(&f, 1).unwrap().max_abs_diff(&partial_sum(&f, 1).unwrap()) < 1e-14);
        let psi1 = Signal::character(&g, 1);
        let half = psi1.scale(Complex64::new(0.5, 0.0));
        assert!(fejer_mean(&psi1, 2).unwrap().max_abs_diff(&half) < 1e-14);
    }

    #[test]
    fn sweep_matches_weights() {
        let g = GroupSpec::new(&[3, 2, 2, 3], 4).unwrap();
        let f = random_signal(&g, 5);
        let s = forward_fast(&f);
        let mut sweep = MeanSweep::new(&s);
        while let Some(k) = sweep.advance() {
            let direct = fejer_mean_of(&s, k).unwrap();
            assert!(max_abs_diff(sweep.mean(), direct.values()) < 1e-12);
            let partial = partial_sum_of(&s, k).unwrap();
            assert!(max_abs_diff(sweep.partial(), partial.values()) < 1e-12);
        }
        assert_eq!(sweep.k(), g.size());
    }

    #[test]
    fn csv_round_trip() {
        let g = GroupSpec::new(&[2, 3], 2).unwrap();
        let f = random_signal(&g, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        f.write_csv(&path).unwrap();
        assert_eq!(Signal::read_csv(&g, &path).unwrap(), f);
    }
}
