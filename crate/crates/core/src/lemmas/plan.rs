//! Exact evaluation of the size and balance recurrences that drive the
//! recursive construction.
//!
//! With `T = 3^(2t)`:
//!
//! ```text
//! alpha_0 = T + 4t + 2          beta_0 = 0
//! alpha_{i+1} = d alpha_i + 2 T d^i + d
//! beta_{i+1}  = d beta_i + d^(i+1) / (3T)
//! alpha'_l = 2 d^l T + d        beta'_l = d^(l+1) / (3T)
//! ```
//!
//! Dividing by `d^i` gives `beta_k / d^k = k / (3T)` and
//! `alpha_k / d^k = T + 4t + 2 + 2Tk/d + (1 - d^-k) d / (d - 1)`, which
//! brackets the ratio `beta_k / alpha_k` without ever forming `d^k`. The
//! bracket is what certifies the headline parameters, where `d^k` has far
//! too many digits to write down.

use std::fmt::Write as _;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Above this many bits in `d^k` the planner reports bounds only.
const EXACT_BITS: u64 = 1 << 16;

pub fn big_t(t: u32) -> BigInt {
    num::pow(BigInt::from(3u32), 2 * t as usize)
}

fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelEntry {
    pub i: u64,
    pub alpha: BigInt,
    pub beta: BigRational,
    pub alpha_p: BigInt,
    pub beta_p: BigRational,
}

/// Exact bracket `lower <= beta_k / alpha_k <= upper`; `exact` is filled in
/// when `d^k` is small enough to evaluate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioCertificate {
    pub lower: BigRational,
    pub upper: BigRational,
    pub exact: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceTable {
    pub t: u32,
    pub big_t: BigInt,
    pub d: BigInt,
    pub k: u64,
    pub n: u64,
    /// Per-level entries `i = 0..=k`; empty when only bounds are available.
    pub levels: Vec<LevelEntry>,
    /// Shifting thresholds `N_j` for `j = t, t-1, ..., -t`.
    pub shift_thresholds: Vec<(i64, BigInt)>,
    /// Materialised sizes `|X|`, `|Y|` of the recursive step, when exact.
    pub x: Option<BigInt>,
    pub y: Option<BigInt>,
    /// `10 d^(2k+1) n`, when exact.
    pub size_bound: Option<BigInt>,
    pub ratio: RatioCertificate,
    /// `3T + 1`, the balance the finishing stages need.
    pub required_ratio: BigInt,
}

impl RecurrenceTable {
    /// The ratio certainly reaches `3T + 1`.
    pub fn certifies_full(&self) -> bool {
        self.ratio.lower >= int(self.required_ratio.clone())
    }

    /// The ratio certainly stays below `3T + 1`.
    pub fn refutes_full(&self) -> bool {
        self.ratio.upper < int(self.required_ratio.clone())
    }

    pub fn shift_bound_holds(&self) -> bool {
        self.shift_thresholds.last().is_some_and(|(_, nk)| nk <= &self.big_t)
    }

    pub fn sizes_within_bound(&self) -> Option<bool> {
        let b = self.size_bound.as_ref()?;
        Some(self.x.as_ref()? <= b && self.y.as_ref()? <= b)
    }

    /// Half-width `b = 3t + 1 + |Y|` of the full construction's domain.
    pub fn full_half_width(&self) -> Option<BigInt> {
        Some(BigInt::from(3 * self.t + 1) + self.y.as_ref()?)
    }

    /// One entry per line, `key [index] value`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "t {}", self.t);
        let _ = writeln!(s, "T {}", self.big_t);
        let _ = writeln!(s, "d {}", self.d);
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "n {}", self.n);
        for e in &self.levels {
            let _ = writeln!(s, "alpha {} {}", e.i, e.alpha);
            let _ = writeln!(s, "beta {} {}", e.i, e.beta);
            let _ = writeln!(s, "alpha_p {} {}", e.i, e.alpha_p);
            let _ = writeln!(s, "beta_p {} {}", e.i, e.beta_p);
        }
        for (j, nj) in &self.shift_thresholds {
            let _ = writeln!(s, "N {j} {nj}");
        }
        if let Some(x) = &self.x {
            let _ = writeln!(s, "x {x}");
        }
        if let Some(y) = &self.y {
            let _ = writeln!(s, "y {y}");
        }
        if let Some(b) = &self.size_bound {
            let _ = writeln!(s, "size_bound {b}");
        }
        if let Some(b) = self.full_half_width() {
            let _ = writeln!(s, "half_width {b}");
        }
        let _ = writeln!(s, "ratio_lower {}", self.ratio.lower);
        let _ = writeln!(s, "ratio_upper {}", self.ratio.upper);
        if let Some(r) = &self.ratio.exact {
            let _ = writeln!(s, "ratio {r}");
        }
        let _ = writeln!(s, "ratio_required {}", self.required_ratio);
        let _ = writeln!(s, "certified {}", self.certifies_full());
        s
    }
}

/// `N_t = 0`, `N_j = 2 (N_{j+1} + t - j)`, listed from `j = t` down to `-t`.
pub fn shift_thresholds(t: u32) -> Vec<(i64, BigInt)> {
    let t = t as i64;
    let mut out = vec![(t, BigInt::zero())];
    for j in (-t..t).rev() {
        let prev = out.last().unwrap().1.clone();
        out.push((j, (prev + BigInt::from(t - j)) * 2));
    }
    out
}

/// Length of a block that the shifting procedure moves into a window
/// spanning `[j, t]`: at least `N_j`.
pub fn shift_threshold(t: u32, j: i64) -> u64 {
    shift_thresholds(t)
        .into_iter()
        .find(|(jj, _)| *jj == j)
        .and_then(|(_, n)| n.to_u64())
        .expect("threshold index within [-t, t]")
}

fn alpha0(t: u32, big_t: &BigInt) -> BigInt {
    big_t + BigInt::from(4 * t + 2)
}

/// Bracket for `beta_k / alpha_k` from the normalised closed form.
pub fn ratio_bracket(t: u32, d: &BigInt, k: u64) -> RatioCertificate {
    let tt = big_t(t);
    let kq = int(k);
    let dq = int(d.clone());
    let beta = kq.clone() / (int(3) * int(tt.clone()));
    let base = int(alpha0(t, &tt)) + int(2) * int(tt) * kq / dq.clone();
    // sum_{i<k} d^-i lies in [min(k,1), d/(d-1)) for d > 1.
    let (sum_lo, sum_hi) = if k == 0 {
        (BigRational::zero(), BigRational::zero())
    } else if d.is_one() {
        (int(k), int(k))
    } else {
        (BigRational::one(), dq.clone() / (dq - BigRational::one()))
    };
    let lower = beta.clone() / (base.clone() + sum_hi);
    let upper = beta / (base + sum_lo);
    RatioCertificate { lower, upper, exact: None }
}

pub fn plan_sizes(t: u32, d: &BigInt, k: u64, n: u64) -> Result<RecurrenceTable> {
    if d < &BigInt::one() || n < 1 {
        return Err(Error::contract("planner needs d >= 1 and n >= 1"));
    }
    let tt = big_t(t);
    let exact = d.bits() * k.max(1) <= EXACT_BITS && k <= 1 << 16;
    let mut ratio = ratio_bracket(t, d, k);
    let mut levels = Vec::new();
    let (mut x, mut y, mut size_bound) = (None, None, None);
    if exact {
        let three_t = int(BigInt::from(3) * &tt);
        let mut alpha = alpha0(t, &tt);
        let mut beta = BigRational::zero();
        let mut dpow = BigInt::one();
        for i in 0..=k {
            let alpha_p = BigInt::from(2) * &dpow * &tt + d;
            let beta_p = int(&dpow * d) / three_t.clone();
            levels.push(LevelEntry {
                i,
                alpha: alpha.clone(),
                beta: beta.clone(),
                alpha_p: alpha_p.clone(),
                beta_p: beta_p.clone(),
            });
            if i < k {
                alpha = d * &alpha + &alpha_p;
                beta = int(d.clone()) * beta + beta_p;
                dpow *= d;
            }
        }
        let last = levels.last().unwrap();
        let r = last.beta.clone() / int(last.alpha.clone());
        ratio = RatioCertificate { lower: r.clone(), upper: r.clone(), exact: Some(r) };
        let (xs, ys) = recursive_sizes(t, d, k, n)?;
        x = Some(xs);
        y = Some(ys);
        size_bound = Some(BigInt::from(10) * num::pow(d.clone(), 2 * k as usize + 1) * BigInt::from(n));
    }
    Ok(RecurrenceTable {
        t,
        big_t: tt.clone(),
        d: d.clone(),
        k,
        n,
        levels,
        shift_thresholds: shift_thresholds(t),
        x,
        y,
        size_bound,
        ratio,
        required_ratio: BigInt::from(3) * tt + 1,
    })
}

/// `p = floor((m d - T) / (T + 4t + 2))` with `m = d^(level - 1)`: the number
/// of single-element pieces used when forming level `level`.
pub fn singles(t: u32, d: &BigInt, level: u64) -> BigInt {
    let tt = big_t(t);
    let md = num::pow(d.clone(), level as usize);
    let num = md - &tt;
    let den = alpha0(t, &tt);
    if num.is_negative() {
        BigInt::zero()
    } else {
        num / den
    }
}

/// `(|X|, |Y|)` for the recursive step at level `k` with parameter `n`:
/// `x_{n,0} = n + 1`, `y_{n,0} = T + 4t + 3 + n`, and for `k >= 1`
/// `x_{n,k} = d x_{n+1,k-1} + p + 2t + 1`,
/// `y_{n,k} = d y_{n+1,k-1} + m (T + d + 4t + 2) + p`.
pub fn recursive_sizes(t: u32, d: &BigInt, k: u64, n: u64) -> Result<(BigInt, BigInt)> {
    let tt = big_t(t);
    let top_n = BigInt::from(n) + BigInt::from(k);
    let mut x = &top_n + 1;
    let mut y = &tt + BigInt::from(4 * t + 3) + &top_n;
    let mut m = BigInt::one();
    for level in 1..=k {
        let p = singles(t, d, level);
        x = d * &x + &p + BigInt::from(2 * t + 1);
        y = d * &y + &m * (&tt + d + BigInt::from(4 * t + 2)) + &p;
        m *= d;
    }
    Ok((x, y))
}

/// Result of checking `beta'_l/alpha'_l > beta_{l+1}/alpha_{l+1} > beta_l/alpha_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimCheck {
    pub holds: bool,
    pub first_counterexample: Option<u64>,
}

/// Checks the ratio monotonicity claim in exact rationals for `l = 0..=l_max`.
/// `big_t` must be a power of 9 (`T = 3^(2t)`).
pub fn check_claim_monotonicity(big_t_value: u64, d: u64, l_max: u64) -> Result<ClaimCheck> {
    let mut t = 0u32;
    let mut p = 1u64;
    while p < big_t_value {
        p *= 9;
        t += 1;
    }
    if p != big_t_value {
        return Err(Error::contract(format!("T={big_t_value} is not of the form 3^(2t)")));
    }
    if d < 9 * big_t_value {
        return Err(Error::contract(format!("claim needs d >= 9T, got d={d}")));
    }
    let tt = big_t(t);
    let dd = BigInt::from(d);
    let three_t = int(BigInt::from(3) * &tt);
    let mut alpha = int(alpha0(t, &tt));
    let mut beta = BigRational::zero();
    let mut dpow = BigInt::one();
    for l in 0..=l_max {
        let alpha_p = int(BigInt::from(2) * &dpow * &tt + &dd);
        let beta_p = int(&dpow * &dd) / three_t.clone();
        let next_alpha = int(dd.clone()) * alpha.clone() + alpha_p.clone();
        let next_beta = int(dd.clone()) * beta.clone() + beta_p.clone();
        // a/b > c/e  <=>  a e > c b for positive denominators.
        let upper = beta_p * next_alpha.clone() > next_beta.clone() * alpha_p;
        let lower = next_beta.clone() * alpha.clone() > beta.clone() * next_alpha.clone();
        if !(upper && lower) {
            return Ok(ClaimCheck { holds: false, first_counterexample: Some(l) });
        }
        alpha = next_alpha;
        beta = next_beta;
        dpow *= &dd;
    }
    Ok(ClaimCheck { holds: true, first_counterexample: None })
}
