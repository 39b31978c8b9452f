//! Centred sequences, blocks and flips.
//!
//! A centred sequence is an injective integer sequence indexed by an integer
//! interval `[lo, hi]`; a block is the same data without the indexing. All
//! values are distinct, so "increasing" always means strictly increasing.
//! Midpoints of flips are half-integers and are handled as `c + d` (twice the
//! midpoint) so that every comparison stays in the integers.

use std::collections::HashSet;
use std::fmt;

use num::{BigInt, BigRational, Zero};

use crate::error::{Error, Result};

/// Reversal of the contiguous positions `c..=d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flip {
    pub c: i64,
    pub d: i64,
}

impl Flip {
    pub fn new(c: i64, d: i64) -> Result<Self> {
        if c > d {
            return Err(Error::contract(format!("flip [{c},{d}] has c > d")));
        }
        Ok(Flip { c, d })
    }

    /// Adjacent transposition of positions `p` and `p + 1`.
    pub fn transposition(p: i64) -> Self {
        Flip { c: p, d: p + 1 }
    }

    pub fn size(&self) -> i64 {
        self.d - self.c + 1
    }

    /// Twice the midpoint, `c + d`.
    pub fn midpoint2(&self) -> i64 {
        self.c + self.d
    }

    pub fn overlaps(&self, other: &Flip) -> bool {
        self.c <= other.d && other.c <= self.d
    }
}

impl fmt::Display for Flip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.c, self.d)
    }
}

/// The forbidden central interval `[-t, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    t: i64,
}

impl Window {
    pub fn new(t: i64) -> Result<Self> {
        if t < 0 {
            return Err(Error::contract(format!("window parameter t={t} is negative")));
        }
        Ok(Window { t })
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    /// Whether the flip's midpoint lies in the real interval `[-t, t]`.
    pub fn contains_midpoint(&self, f: &Flip) -> bool {
        f.midpoint2().abs() <= 2 * self.t
    }
}

fn check_distinct(values: &[i64]) -> Result<()> {
    let mut seen = HashSet::with_capacity(values.len());
    for &v in values {
        if !seen.insert(v) {
            return Err(Error::contract(format!("value {v} repeated")));
        }
    }
    Ok(())
}

pub fn is_increasing(values: &[i64]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

pub fn is_decreasing(values: &[i64]) -> bool {
    values.windows(2).all(|w| w[0] > w[1])
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CentredSequence {
    lo: i64,
    values: Vec<i64>,
}

impl CentredSequence {
    pub fn new(lo: i64, values: Vec<i64>) -> Result<Self> {
        check_distinct(&values)?;
        Ok(CentredSequence { lo, values })
    }

    /// The identity map on `[lo, hi]`.
    pub fn identity(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::contract(format!("empty domain [{lo},{hi}]")));
        }
        Ok(CentredSequence { lo, values: (lo..=hi).collect() })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, p: i64) -> Option<i64> {
        let i = p.checked_sub(self.lo)?;
        usize::try_from(i).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn check_flip(&self, f: &Flip) -> Result<()> {
        if f.c < self.lo || f.d > self.hi() {
            return Err(Error::Range { c: f.c, d: f.d, lo: self.lo, hi: self.hi() });
        }
        Ok(())
    }

    pub fn slice(&self, f: &Flip) -> Result<&[i64]> {
        self.check_flip(f)?;
        let a = (f.c - self.lo) as usize;
        let b = (f.d - self.lo) as usize;
        Ok(&self.values[a..=b])
    }

    pub fn apply_flip(&self, f: &Flip) -> Result<Self> {
        let mut out = self.clone();
        out.apply_flip_mut(f)?;
        Ok(out)
    }

    pub fn apply_flip_mut(&mut self, f: &Flip) -> Result<()> {
        self.check_flip(f)?;
        let a = (f.c - self.lo) as usize;
        let b = (f.d - self.lo) as usize;
        self.values[a..=b].reverse();
        Ok(())
    }

    /// The same values in reverse order on the same domain.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        CentredSequence { lo: self.lo, values }
    }
}

impl AsRef<[i64]> for CentredSequence {
    fn as_ref(&self) -> &[i64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Block(Vec<i64>);

impl Block {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        check_distinct(&values)?;
        Ok(Block(values))
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<i64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_increasing(&self) -> bool {
        is_increasing(&self.0)
    }

    pub fn reversed(&self) -> Block {
        Block(self.0.iter().rev().copied().collect())
    }

    /// Block flip with 1-based positions, reversing `B_c..=B_d`.
    pub fn apply_flip_mut(&mut self, f: &Flip) -> Result<()> {
        self.check_flip(f)?;
        self.0[(f.c - 1) as usize..f.d as usize].reverse();
        Ok(())
    }

    fn check_flip(&self, f: &Flip) -> Result<()> {
        if f.c < 1 || f.d > self.0.len() as i64 {
            return Err(Error::Range { c: f.c, d: f.d, lo: 1, hi: self.0.len() as i64 });
        }
        Ok(())
    }
}

impl AsRef<[i64]> for Block {
    fn as_ref(&self) -> &[i64] {
        &self.0
    }
}

/// A flip on a centred sequence is valid when the affected run is increasing
/// and its midpoint avoids the window.
pub fn is_valid_flip_centred(seq: &CentredSequence, f: &Flip, w: Window) -> Result<bool> {
    let run = seq.slice(f)?;
    Ok(is_increasing(run) && !w.contains_midpoint(f))
}

/// Block flips (1-based) only need the run to be increasing.
pub fn is_valid_flip_block(b: &Block, f: &Flip) -> Result<bool> {
    b.check_flip(f)?;
    Ok(is_increasing(&b.0[(f.c - 1) as usize..f.d as usize]))
}

/// Place a block on the domain `[hi - |b| + 1, hi]`.
pub fn as_centred(b: &Block, hi: i64) -> CentredSequence {
    CentredSequence { lo: hi - b.len() as i64 + 1, values: b.0.clone() }
}

pub fn as_block(seq: &CentredSequence) -> Block {
    Block(seq.values.clone())
}

/// `x ≺ y`: every value of `x` is below every value of `y`.
pub fn precedes<X: AsRef<[i64]> + ?Sized, Y: AsRef<[i64]> + ?Sized>(x: &X, y: &Y) -> Result<bool> {
    let (x, y) = (x.as_ref(), y.as_ref());
    match (x.iter().max(), y.iter().min()) {
        (Some(a), Some(b)) => Ok(a < b),
        _ => Err(Error::contract("precedes needs two nonempty operands")),
    }
}

/// Chains produced by greedy peeling: repeatedly take the first remaining
/// index, then each next remaining index whose value exceeds the last taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyPartition {
    /// Indices into the block, each chain in increasing index order.
    pub chains: Vec<Vec<usize>>,
}

impl GreedyPartition {
    pub fn width(&self) -> usize {
        self.chains.len()
    }

    /// For each prefix length `m` (1-based, index `m - 1`), the number of
    /// chains that start within the prefix. This equals the prefix width.
    pub fn prefix_widths(&self, len: usize) -> Vec<usize> {
        let mut starts = vec![0usize; len];
        for chain in &self.chains {
            starts[chain[0]] += 1;
        }
        let mut acc = 0;
        starts
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect()
    }
}

pub fn greedy_partition(values: &[i64]) -> GreedyPartition {
    let mut remaining: Vec<usize> = (0..values.len()).collect();
    let mut chains = Vec::new();
    while !remaining.is_empty() {
        let mut chain = Vec::new();
        let mut rest = Vec::with_capacity(remaining.len());
        let mut last: Option<i64> = None;
        for &i in &remaining {
            if last.is_none_or(|l| values[i] > l) {
                chain.push(i);
                last = Some(values[i]);
            } else {
                rest.push(i);
            }
        }
        chains.push(chain);
        remaining = rest;
    }
    GreedyPartition { chains }
}

/// Width (longest strictly decreasing subsequence) via greedy peeling,
/// together with the partition into increasing subsequences.
pub fn width_greedy(b: &Block) -> (usize, GreedyPartition) {
    let p = greedy_partition(&b.0);
    (p.width(), p)
}

/// Subsequences of strictly positive and strictly negative values. Zero
/// belongs to neither.
pub fn sign_parts(b: &Block) -> (Block, Block) {
    let pos = b.0.iter().copied().filter(|&v| v > 0).collect();
    let neg = b.0.iter().copied().filter(|&v| v < 0).collect();
    (Block(pos), Block(neg))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BalanceWitness {
    /// The negative part descends at this index of the block (0-based).
    NegativeDescent { index: usize },
    /// The prefix of this length has too few negatives for its positive width.
    Prefix { len: usize, negatives: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceReport {
    pub balanced: bool,
    pub r: BigRational,
    pub witness: Option<BalanceWitness>,
}

fn reject_zero(values: &[i64]) -> Result<()> {
    if values.contains(&0) {
        return Err(Error::contract("balance is undefined for blocks containing 0"));
    }
    Ok(())
}

fn negative_descent(values: &[i64]) -> Option<usize> {
    let mut last: Option<i64> = None;
    for (i, &v) in values.iter().enumerate() {
        if v < 0 {
            if last.is_some_and(|l| l > v) {
                return Some(i);
            }
            last = Some(v);
        }
    }
    None
}

/// Prefix statistics `(negatives, positive width)` for every prefix.
fn prefix_stats(values: &[i64]) -> Vec<(usize, usize)> {
    let positive_idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0).collect();
    let positives: Vec<i64> = positive_idx.iter().map(|&i| values[i]).collect();
    let widths = greedy_partition(&positives).prefix_widths(positives.len());
    let mut out = Vec::with_capacity(values.len());
    let (mut neg, mut seen_pos) = (0usize, 0usize);
    for &v in values {
        if v < 0 {
            neg += 1;
        } else {
            seen_pos += 1;
        }
        let w = if seen_pos == 0 { 0 } else { widths[seen_pos - 1] };
        out.push((neg, w));
    }
    out
}

pub fn is_r_balanced(b: &Block, r: &BigRational) -> Result<BalanceReport> {
    if r < &BigRational::zero() {
        return Err(Error::contract("balance ratio r must be nonnegative"));
    }
    reject_zero(&b.0)?;
    let mut report = BalanceReport { balanced: true, r: r.clone(), witness: None };
    if let Some(index) = negative_descent(&b.0) {
        report.balanced = false;
        report.witness = Some(BalanceWitness::NegativeDescent { index });
        return Ok(report);
    }
    for (i, (negatives, width)) in prefix_stats(&b.0).into_iter().enumerate() {
        let lhs = BigRational::from_integer(BigInt::from(negatives));
        if lhs < r * BigRational::from_integer(BigInt::from(width)) {
            report.balanced = false;
            report.witness = Some(BalanceWitness::Prefix { len: i + 1, negatives, width });
            break;
        }
    }
    Ok(report)
}

/// The largest `r` for which the block is `r`-balanced: `None` when it is not
/// balanced for any `r` (descending negative part), `Some(None)` when it is
/// balanced for every `r` (no positive values).
pub fn max_balance(b: &Block) -> Result<Option<Option<BigRational>>> {
    reject_zero(&b.0)?;
    if negative_descent(&b.0).is_some() {
        return Ok(None);
    }
    let best = prefix_stats(&b.0)
        .into_iter()
        .filter(|&(_, w)| w > 0)
        .map(|(n, w)| BigRational::new(BigInt::from(n), BigInt::from(w)))
        .min();
    Ok(Some(best))
}
