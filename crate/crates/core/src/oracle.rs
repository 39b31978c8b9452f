//! Brute-force references for small inputs.

use std::collections::{HashMap, HashSet, VecDeque};

use num::rational::Ratio;
use num::{BigRational, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::format::write_trace;
use crate::seq::{Block, CentredSequence, Flip, Window};

/// Longest strictly decreasing subsequence, quadratic dynamic programme.
pub fn width_dp(b: &Block) -> usize {
    let v = b.values();
    let mut best = vec![1usize; v.len()];
    for i in 0..v.len() {
        for j in 0..i {
            if v[j] > v[i] && best[j] + 1 > best[i] {
                best[i] = best[j] + 1;
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

pub const DEFAULT_SEARCH_LIMIT: usize = 8;
const MAX_SEARCH_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    SingleFlip,
    MultiFlip,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub n: usize,
    pub best_min_deviation: Ratio<i64>,
    pub witness: Trace,
    /// Permutations reachable from the identity by valid flips.
    pub states_explored: usize,
}

impl SearchResult {
    pub fn to_text(&self) -> Result<String> {
        let mut buf = format!(
            "{} {}/{} {}\n",
            self.n,
            self.best_min_deviation.numer(),
            self.best_min_deviation.denom(),
            self.states_explored
        )
        .into_bytes();
        write_trace(&mut buf, &self.witness)?;
        Ok(String::from_utf8(buf).expect("utf-8"))
    }
}

type Packed = u64;

fn pack(p: &[u8]) -> Packed {
    p.iter().fold(0, |acc, &v| (acc << 4) | v as u64)
}

fn unpack(mut x: Packed, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for i in (0..n).rev() {
        out[i] = (x & 0xf) as u8;
        x >>= 4;
    }
    out
}

/// Every flip `[a, b]` (0-based, `a < b`) on an increasing run of `p`.
fn valid_flips(p: &[u8]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..p.len() {
        let mut b = a + 1;
        while b < p.len() && p[b - 1] < p[b] {
            out.push((a, b));
            b += 1;
        }
    }
    out
}

/// Twice the deviation of a 0-based flip `[a, b]` on `n` positions.
fn dev2(n: usize, a: usize, b: usize) -> i64 {
    (a as i64 + b as i64 - (n as i64 - 1)).abs()
}

/// Breadth-first search from the identity using flips with doubled
/// deviation at least `min_dev2`. Returns the visited count and the flip path
/// to the reversal if reached.
fn bfs(n: usize, min_dev2: i64) -> (usize, Option<Vec<(usize, usize)>>) {
    let start: Vec<u8> = (0..n as u8).collect();
    let goal: Vec<u8> = start.iter().rev().copied().collect();
    let (s, g) = (pack(&start), pack(&goal));
    let mut parent: HashMap<Packed, (Packed, (usize, usize))> = HashMap::new();
    let mut seen: HashSet<Packed> = HashSet::from([s]);
    let mut queue = VecDeque::from([s]);
    let mut found = s == g;
    while let Some(x) = queue.pop_front() {
        let p = unpack(x, n);
        for (a, b) in valid_flips(&p) {
            if dev2(n, a, b) < min_dev2 {
                continue;
            }
            let mut q = p.clone();
            q[a..=b].reverse();
            let y = pack(&q);
            if seen.insert(y) {
                parent.insert(y, (x, (a, b)));
                found |= y == g;
                queue.push_back(y);
            }
        }
    }
    if !found {
        return (seen.len(), None);
    }
    let mut path = Vec::new();
    let mut cur = g;
    while cur != s {
        let (prev, f) = parent[&cur];
        path.push(f);
        cur = prev;
    }
    path.reverse();
    (seen.len(), Some(path))
}

/// Number of permutations of `1..n` reachable from the identity.
pub fn reachable_states(n: usize) -> usize {
    bfs(n, 0).0
}

/// Largest achievable minimum flip deviation over allowable sequences from
/// the identity on `1..n` to its reversal. Several disjoint flips in one
/// step can always be applied one after another, so both modes reach the
/// same states and share the optimum; the witness uses one flip per step.
pub fn search_best_deviation(n: usize, mode: SearchMode, limit: usize) -> Result<SearchResult> {
    let _ = mode;
    if n < 2 {
        return Err(Error::contract("search needs n >= 2"));
    }
    if n > limit || n > MAX_SEARCH_N {
        return Err(Error::Refused(format!(
            "n = {n} exceeds the search limit {} (state space n! = {})",
            limit.min(MAX_SEARCH_N),
            (1..=n as u128).product::<u128>()
        )));
    }
    let (states, _) = bfs(n, 0);
    let mut thresholds: Vec<i64> = (0..n).flat_map(|a| (a + 1..n).map(move |b| dev2(n, a, b))).collect();
    thresholds.sort_unstable_by(|a, b| b.cmp(a));
    thresholds.dedup();
    for q in thresholds {
        if let (_, Some(path)) = bfs(n, q) {
            let steps: Vec<Vec<Flip>> =
                path.iter().map(|&(a, b)| vec![Flip { c: a as i64 + 1, d: b as i64 + 1 }]).collect();
            let best = steps.iter().map(|s| dev2(n, (s[0].c - 1) as usize, (s[0].d - 1) as usize)).min().unwrap();
            let witness = Trace::from_parts(CentredSequence::identity(1, n as i64)?, Window::new(0)?, steps, vec![])?;
            return Ok(SearchResult { n, best_min_deviation: Ratio::new(best, 2), witness, states_explored: states });
        }
    }
    Err(Error::contract("reversal is unreachable"))
}

/// A block of `size` values, deterministic per seed, that is `r`-balanced:
/// an increasing negative run interleaved with positives, each positive only
/// placed when the prefix keeps `|negatives| >= r * width(positives)`.
pub fn sample_balanced_block(size: usize, r: &BigRational, seed: u64) -> Result<Block> {
    if r < &BigRational::zero() {
        return Err(Error::contract("r must be nonnegative"));
    }
    if size == 0 {
        return Err(Error::contract("cannot sample an empty block"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positives: Vec<i64> = (1..=2 * size as i64).collect();
    for i in (1..positives.len()).rev() {
        positives.swap(i, rng.gen_range(0..=i));
    }
    let mut pool = positives.into_iter();
    // tails[i]: smallest last value of a decreasing run of length i + 1, negated
    let mut tails: Vec<i64> = Vec::new();
    let mut slots: Vec<Option<i64>> = Vec::with_capacity(size);
    let mut negatives = 0i64;
    for _ in 0..size {
        let mut placed = false;
        if rng.gen_bool(0.5) {
            let v = pool.next().expect("pool holds 2 * size values");
            let key = -v;
            let at = tails.partition_point(|&x| x < key);
            let width = if at == tails.len() { tails.len() + 1 } else { tails.len() };
            let need = r * BigRational::from_integer(width.into());
            if BigRational::from_integer(negatives.into()) >= need {
                if at == tails.len() {
                    tails.push(key);
                } else {
                    tails[at] = key;
                }
                slots.push(Some(v));
                placed = true;
            }
        }
        if !placed {
            negatives += 1;
            slots.push(None);
        }
    }
    let mut next_neg = -negatives;
    let values = slots
        .into_iter()
        .map(|s| {
            s.unwrap_or_else(|| {
                let v = next_neg;
                next_neg += 1;
                v
            })
        })
        .collect();
    Block::new(values)
}

/// Whether `next` arises from `prev` by reversing one or more disjoint
/// increasing runs of length at least two.
fn one_step(prev: &[i64], next: &[i64]) -> bool {
    let n = prev.len();
    if next.len() != n || prev == next {
        return false;
    }
    // ok[i]: positions 0..i are explained
    let mut ok = vec![false; n + 1];
    ok[0] = true;
    for i in 0..n {
        if !ok[i] {
            continue;
        }
        if prev[i] == next[i] {
            ok[i + 1] = true;
        }
        let mut j = i + 1;
        while j < n && prev[j - 1] < prev[j] {
            if (0..=j - i).all(|k| next[i + k] == prev[j - k]) {
                ok[j + 1] = true;
            }
            j += 1;
        }
    }
    ok[n]
}

/// Independent allowability check on explicit permutations: each state must
/// follow from the previous one by a single step of disjoint increasing-run
/// reversals.
pub fn allowability_bruteforce(initial: &[i64], states: &[Vec<i64>]) -> bool {
    let mut prev = initial;
    for s in states {
        if !one_step(prev, s) {
            return false;
        }
        prev = s;
    }
    true
}

/// The permutations visited by a trace, one per step.
pub fn trace_states(tr: &Trace) -> Vec<Vec<i64>> {
    let lo = tr.initial().lo();
    let mut cur = tr.initial().values().to_vec();
    let mut out = Vec::with_capacity(tr.step_count());
    for step in tr.steps() {
        for f in step {
            let (a, b) = ((f.c - lo).to_usize(), (f.d - lo).to_usize());
            if let (Some(a), Some(b)) = (a, b) {
                if a <= b && b < cur.len() {
                    cur[a..=b].reverse();
                }
            }
        }
        out.push(cur.clone());
    }
    out
}
