//! Mixed-radix arithmetic on a bounded Vilenkin group truncated at level `N`.
//!
//! A truncated group is the finite product `Z_{m_0} x ... x Z_{m_{N-1}}`.
//! Each element stands for a coset of `I_N`, and the linear index
//! `sum x_k M_k` is the canonical enumeration order used by signals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible group order `M_N`.
pub const CAPACITY: u64 = 1 << 31;

#[derive(Debug, PartialEq, Eq)]
struct Inner {
    radices: Vec<u32>,
    powers: Vec<usize>,
    lambda: u32,
}

/// Radix sequence `m_0..m_{N-1}` with the generalized powers
/// `M_0 = 1, M_{k+1} = m_k M_k` precomputed.
///
/// Cloning is cheap; clones compare equal and share storage.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupSpec(Arc<Inner>);

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupSpec")
            .field("m", &self.0.radices)
            .field("M", &self.0.powers)
            .finish()
    }
}

impl GroupSpec {
    /// Builds the truncation of `G_m` at `level` from the first `level`
    /// radices of `m`.
    pub fn new(m: &[u32], level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::OutOfRange {
                what: "truncation level",
                value: 0,
                limit: 1,
            });
        }
        if m.len() < level {
            return Err(Error::OutOfRange {
                what: "truncation level",
                value: level,
                limit: m.len(),
            });
        }
        let radices = m[..level].to_vec();
        if let Some((position, &radix)) = radices.iter().enumerate().find(|(_, &r)| r < 2) {
            return Err(Error::InvalidRadix { position, radix });
        }
        let size: u128 = radices.iter().map(|&r| r as u128).product();
        if size > CAPACITY as u128 {
            return Err(Error::Capacity {
                size,
                limit: CAPACITY,
            });
        }
        let mut powers = Vec::with_capacity(level + 1);
        powers.push(1usize);
        for &r in &radices {
            let last = *powers.last().unwrap();
            powers.push(last * r as usize);
        }
        let lambda = *radices.iter().max().unwrap();
        Ok(GroupSpec(Arc::new(Inner {
            radices,
            powers,
            lambda,
        })))
    }

    /// All radices equal to 2.
    pub fn walsh(level: usize) -> Result<Self> {
        Self::new(&vec![2; level], level)
    }

    /// Repeats `pattern` cyclically up to `level` positions.
    pub fn cyclic(pattern: &[u32], level: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Config("empty radix pattern".into()));
        }
        let m: Vec<u32> = pattern.iter().copied().cycle().take(level).collect();
        Self::new(&m, level)
    }

    /// Same radices cut at a shallower level.
    pub fn truncate(&self, level: usize) -> Result<Self> {
        Self::new(&self.0.radices, level)
    }

    pub fn level(&self) -> usize {
        self.0.radices.len()
    }

    pub fn radices(&self) -> &[u32] {
        &self.0.radices
    }

    pub fn radix(&self, k: usize) -> u32 {
        self.0.radices[k]
    }

    /// `M_0..M_N`.
    pub fn powers(&self) -> &[usize] {
        &self.0.powers
    }

    /// `M_k` for `k <= N`.
    pub fn power(&self, k: usize) -> usize {
        self.0.powers[k]
    }

    /// `M_N`, the number of cosets.
    pub fn size(&self) -> usize {
        self.0.powers[self.level()]
    }

    /// `sup_k m_k` over the stored radices.
    pub fn lambda(&self) -> u32 {
        self.0.lambda
    }

    pub fn is_walsh(&self) -> bool {
        self.0.radices.iter().all(|&r| r == 2)
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.size() {
            Err(Error::OutOfRange {
                what: "index",
                value: n,
                limit: self.size(),
            })
        } else {
            Ok(())
        }
    }

    /// Digit `k` of the linear index `n`.
    #[inline]
    pub fn digit(&self, n: usize, k: usize) -> u32 {
        ((n / self.0.powers[k]) % self.0.radices[k] as usize) as u32
    }

    /// Mixed-radix expansion `n = sum n_j M_j`.
    pub fn digits(&self, n: usize) -> Result<Vec<u32>> {
        self.check_index(n)?;
        Ok(self.digits_unchecked(n))
    }

    pub(crate) fn digits_unchecked(&self, n: usize) -> Vec<u32> {
        let mut rest = n;
        self.0
            .radices
            .iter()
            .map(|&r| {
                let d = (rest % r as usize) as u32;
                rest /= r as usize;
                d
            })
            .collect()
    }

    /// Linear index of a digit vector.
    pub fn index_of(&self, digits: &[u32]) -> Result<usize> {
        if digits.len() != self.level() {
            return Err(Error::SpecMismatch);
        }
        let mut n = 0usize;
        for (k, (&d, &r)) in digits.iter().zip(&self.0.radices).enumerate() {
            if d >= r {
                return Err(Error::OutOfRange {
                    what: "digit",
                    value: d as usize,
                    limit: r as usize,
                });
            }
            n += d as usize * self.0.powers[k];
        }
        Ok(n)
    }

    /// `|n|`, the position of the highest nonzero digit; `-1` for `n = 0`.
    ///
    /// Requires `n < M_N`.
    pub fn order(&self, n: usize) -> isize {
        debug_assert!(n < self.size());
        if n == 0 {
            return -1;
        }
        // largest k with M_k <= n
        self.0.powers[..self.level()]
            .iter()
            .rposition(|&p| p <= n)
            .map(|k| k as isize)
            .unwrap_or(-1)
    }

    pub fn point(&self, index: usize) -> Result<Point> {
        self.check_index(index)?;
        Ok(Point {
            digits: self.digits_unchecked(index),
            index,
            radices: self.clone(),
        })
    }

    pub fn point_from_digits(&self, digits: &[u32]) -> Result<Point> {
        let index = self.index_of(digits)?;
        Ok(Point {
            digits: digits.to_vec(),
            index,
            radices: self.clone(),
        })
    }

    pub fn zero(&self) -> Point {
        self.point(0).unwrap()
    }

    /// `e_n`: digit 1 at position `n`, zero elsewhere.
    pub fn basis_point(&self, n: usize) -> Result<Point> {
        if n >= self.level() {
            return Err(Error::OutOfRange {
                what: "basis position",
                value: n,
                limit: self.level(),
            });
        }
        self.point(self.power(n))
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.size()).map(move |i| self.point(i).unwrap())
    }

    /// Group operation on linear indices.
    #[inline]
    pub fn add_index(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        for k in 0..self.level() {
            let r = self.0.radices[k];
            let d = (self.digit(a, k) + self.digit(b, k)) % r;
            out += d as usize * self.0.powers[k];
        }
        out
    }

    /// `a - b` on linear indices.
    #[inline]
    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        for k in 0..self.level() {
            let r = self.0.radices[k];
            let d = (self.digit(a, k) + r - self.digit(b, k)) % r;
            out += d as usize * self.0.powers[k];
        }
        out
    }

    pub fn add(&self, x: &Point, y: &Point) -> Result<Point> {
        self.ensure_member(x)?;
        self.ensure_member(y)?;
        self.point(self.add_index(x.index, y.index))
    }

    pub fn sub(&self, x: &Point, y: &Point) -> Result<Point> {
        self.ensure_member(x)?;
        self.ensure_member(y)?;
        self.point(self.sub_index(x.index, y.index))
    }

    fn ensure_member(&self, x: &Point) -> Result<()> {
        if x.radices != *self {
            Err(Error::SpecMismatch)
        } else {
            Ok(())
        }
    }

    /// Whether the first `depth` digits of `y` and `x` agree, i.e.
    /// `y in I_depth(x)`.
    #[inline]
    pub fn same_prefix(&self, y: usize, x: usize, depth: usize) -> bool {
        let p = self.0.powers[depth];
        y % p == x % p
    }

    /// Position of the first nonzero digit, if any.
    pub fn first_nonzero(&self, x: usize) -> Option<usize> {
        (0..self.level()).find(|&k| self.digit(x, k) != 0)
    }

    /// Region classification relative to `I_depth`, looking only at the
    /// first `depth` digits.
    pub fn region_at(&self, x: usize, depth: usize) -> Region {
        let mut nonzero = (0..depth).filter(|&k| self.digit(x, k) != 0);
        match nonzero.next() {
            None => Region::Inside,
            Some(k) => Region::Ring {
                k,
                l: nonzero.next().unwrap_or(depth),
            },
        }
    }

    /// Region of `x` in the partition of `G_m` by `I_N` and the sets
    /// `I_N^{k,l}`.
    pub fn region_of(&self, x: &Point) -> Region {
        self.region_at(x.index, self.level())
    }

    /// Every region label of the partition at `depth`, in canonical order.
    pub fn regions(&self, depth: usize) -> Vec<Region> {
        let mut out = vec![Region::Inside];
        for k in 0..depth {
            for l in k + 1..=depth {
                out.push(Region::Ring { k, l });
            }
        }
        out
    }

    /// Indices of the cosets in `I_depth(x)`, in increasing order.
    pub fn interval_indices(&self, x: usize, depth: usize) -> impl Iterator<Item = usize> + '_ {
        let p = self.power(depth);
        let base = x % p;
        (0..self.size() / p).map(move |j| base + j * p)
    }

    /// Haar measure of a set of distinct cosets.
    pub fn measure(&self, cosets: &[Point]) -> f64 {
        let (num, den) = self.measure_exact(cosets);
        num as f64 / den as f64
    }

    /// Measure as the exact fraction `count / M_N`.
    pub fn measure_exact(&self, cosets: &[Point]) -> (u64, u64) {
        let mut seen: Vec<usize> = cosets.iter().map(|p| p.index).collect();
        seen.sort_unstable();
        seen.dedup();
        (seen.len() as u64, self.size() as u64)
    }
}

/// Label of a coset in the partition of `G_m`.
///
/// `Ring { k, l }` holds points whose first nonzero digit is at `k` and whose
/// second nonzero digit (below the partition depth) is at `l`; `l` equals the
/// depth when there is no second one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Inside,
    Ring { k: usize, l: usize },
}

/// A coset of `I_N`, stored as its digit vector with the cached linear index.
#[derive(Clone, PartialEq, Eq)]
pub struct Point {
    digits: Vec<u32>,
    index: usize,
    radices: GroupSpec,
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point{:?}", self.digits)
    }
}

impl Point {
    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn digit(&self, k: usize) -> u32 {
        self.digits[k]
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.radices
    }

    /// `self in I_n(x)`.
    pub fn in_interval(&self, x: &Point, n: usize) -> bool {
        self.digits[..n] == x.digits[..n]
    }
}

/// On-disk group description: `{"m": [...], "N": level}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupFile {
    pub m: Vec<u32>,
    #[serde(rename = "N")]
    pub level: usize,
}

impl GroupFile {
    pub fn build(&self) -> Result<GroupSpec> {
        GroupSpec::new(&self.m, self.level)
    }
}

impl From<&GroupSpec> for GroupFile {
    fn from(spec: &GroupSpec) -> Self {
        GroupFile {
            m: spec.radices().to_vec(),
            level: spec.level(),
        }
    }
}

/// Parses an inline group description.
///
/// Accepts a radix list `"2,3,2"` (level = length) or `"<radix>^<level>"`
/// such as `"2^10"`.
pub fn parse_inline(text: &str) -> Result<GroupSpec> {
    let text = text.trim();
    if let Some((radix, level)) = text.split_once('^') {
        let radix: u32 = radix
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad radix in {text:?}")))?;
        let level: usize = level
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad level in {text:?}")))?;
        return GroupSpec::new(&vec![radix; level], level);
    }
    let m = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("bad radix list {text:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if m.is_empty() {
        return Err(Error::Config("empty radix list".into()));
    }
    GroupSpec::new(&m, m.len())
}

/// Loads a group from a JSON file path, or falls back to the inline syntax.
pub fn load_group(arg: &str) -> Result<GroupSpec> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Err(Error::Config(format!("group file {arg} is empty")));
        }
        let file: GroupFile = serde_json::from_str(&text)?;
        if file.m.is_empty() || file.level == 0 {
            return Err(Error::Config(format!("group file {arg} lists no radices")));
        }
        return file.build();
    }
    parse_inline(arg)
}
