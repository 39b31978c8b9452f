//! The whole construction: identity on `[-b, b]` to its reversal without a
//! flip centred in `[-t, t]`.

use num::{BigInt, BigRational, ToPrimitive};

use super::decompose::decompose_balanced;
use super::layout::{seg, Layout};
use super::plan::{plan_sizes, RecurrenceTable};
use super::recursive::{run_step, Ctx, DEFAULT_MAX_CELLS};
use super::shift::{reflect, shift};
use crate::engine::{verify_trace, Span, Trace, TraceBuilder, VerificationReport};
use crate::error::{Error, Result};
use crate::seq::{max_balance, Block, CentredSequence, Flip, Window};

/// Why the construction stopped short, with the exact ratios involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageFailure {
    pub stage: String,
    pub reason: String,
    /// `beta_k / alpha_k`, or its lower bound when not evaluated exactly.
    pub planned_ratio: BigRational,
    /// Largest `r` for which the materialised `B_k` is `r`-balanced.
    pub achieved_ratio: Option<BigRational>,
    pub required_ratio: BigInt,
    pub context: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FullRun {
    pub half_width: i64,
    pub trace: Trace,
    pub report: VerificationReport,
}

#[derive(Debug, Clone)]
pub enum FullOutcome {
    Complete(FullRun),
    Failed(StageFailure),
}

/// Lengths of `X' L W A B R J` across the domain; `A` and `J` are `2t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinishLengths {
    pub xp: i64,
    pub l: i64,
    pub w: i64,
    pub b: i64,
    pub r: i64,
}

pub fn full_construction(t: i64, d: i64, k: u64) -> Result<FullOutcome> {
    full_construction_with_limit(t, d, k, DEFAULT_MAX_CELLS)
}

fn balance_failure(plan: &RecurrenceTable, achieved: Option<BigRational>, context: Vec<String>) -> StageFailure {
    let planned = plan.ratio.exact.clone().unwrap_or_else(|| plan.ratio.lower.clone());
    StageFailure {
        stage: "balance".into(),
        reason: format!("r = {planned} is below the required {}", plan.required_ratio),
        planned_ratio: planned,
        achieved_ratio: achieved,
        required_ratio: plan.required_ratio.clone(),
        context,
    }
}

pub fn full_construction_with_limit(t: i64, d: i64, k: u64, max_cells: u64) -> Result<FullOutcome> {
    if t < 0 {
        return Err(Error::contract("t must be nonnegative"));
    }
    let mut ctx = Ctx::new(t, d)?;
    let plan = plan_sizes(t as u32, &BigInt::from(d), k, 1)?;
    let half = match plan.full_half_width() {
        Some(h) if BigInt::from(2) * &h + 1 <= BigInt::from(max_cells) => h.to_i64().unwrap(),
        _ if !plan.certifies_full() => return Ok(FullOutcome::Failed(balance_failure(&plan, None, vec![]))),
        _ => return Err(Error::Refused(format!("domain exceeds the limit of {max_cells} cells"))),
    };
    let (x_len, y_len) = ctx.sizes(k, 1)?;
    let w = 2 * t + 1;
    let mut b = TraceBuilder::new(CentredSequence::identity(-half, half)?, Window::new(t)?);
    b.open("full");
    b.flip(Flip { c: -t, d: 3 * t + 1 })?;
    b.swap_adjacent_blocks(Span::new(t + 1, w), Span::new(3 * t + 2, y_len))?;
    let lens = run_step(&mut b, &mut ctx, k, 1)?;
    let bk = Span::new(t + 1, lens.b);
    if !plan.certifies_full() {
        let achieved = Block::new(b.values(bk).to_vec())
            .and_then(|blk| max_balance(&blk))
            .ok()
            .flatten()
            .flatten();
        return Ok(FullOutcome::Failed(balance_failure(&plan, achieved, b.context())));
    }
    let fl = FinishLengths { xp: half - t - x_len, l: lens.l, w: lens.w, b: lens.b, r: lens.r };
    let r = BigRational::from_integer(plan.required_ratio.clone());
    finish_construction(&mut b, fl, &r)?;
    b.close();
    let trace = b.finish();
    let report = verify_trace(&trace);
    Ok(FullOutcome::Complete(FullRun { half_width: half, trace, report }))
}

/// The stages after the recursive step: decompose `B` into pieces, reflect
/// each piece's positives to the left, then shift `J` into the window and
/// sort both sides. `r` must be at least `3T + 1` and `B` `r`-balanced.
pub fn finish_construction(b: &mut TraceBuilder, fl: FinishLengths, r: &BigRational) -> Result<()> {
    let t = b.t();
    let w = 2 * t + 1;
    let tt = super::shift::min_shift_len(t);
    let mut lay = Layout::new(
        b.lo(),
        vec![seg("X'", fl.xp), seg("L", fl.l), seg("W", fl.w), seg("A", w), seg("B", fl.b), seg("R", fl.r), seg("J", w)],
    );
    if lay.total() != b.hi() - b.lo() + 1 || lay.span("A")? != Span::new(-t, w) {
        return Err(Error::contract("finishing layout does not match the domain"));
    }
    b.open("finish");

    b.open("decompose");
    let bspan = lay.span("B")?;
    let dec = decompose_balanced(&Block::new(b.values(bspan).to_vec())?, r)?;
    for f in &dec.schedule {
        b.flip(Flip { c: bspan.start + f.c - 1, d: bspan.start + f.d - 1 })?;
    }
    let m = dec.k() as i64;
    let mut parts: Vec<_> = dec.blocks.iter().enumerate().map(|(i, c)| seg(format!("C{}", i + 1), c.len() as i64)).collect();
    parts.push(seg("Tail", dec.tail.len() as i64));
    lay.split("B", parts)?;
    let negs: Vec<i64> = dec.blocks.iter().map(|c| c.values().iter().filter(|&&v| v < 0).count() as i64).collect();
    let pos: Vec<i64> = dec.blocks.iter().zip(&negs).map(|(c, n)| c.len() as i64 - n).collect();
    let last = (m - 1) as usize;
    let keep = negs[last] - tt;
    if keep < tt + 4 * t + 2 {
        return Err(b.bug(None, format!("last piece has only {} negatives", negs[last])));
    }
    let cm = format!("C{m}");
    lay.split(&cm, vec![seg("C''", keep), seg("Z", tt), seg("C'''", pos[last])])?;
    lay.rearrange(b, &["C''", "C'''", "Z"])?;
    lay.merge(&["C''", "C'''"], &cm)?;
    lay.merge(&["Z", "Tail"], "Z")?;
    b.close();

    b.open("reflect pieces");
    if pos.iter().sum::<i64>() != fl.xp {
        return Err(b.bug(None, "X' does not match the positive parts of the pieces"));
    }
    lay.split("X'", (1..=m).rev().map(|i| seg(format!("X{i}"), pos[(i - 1) as usize])).collect())?;
    let mut negs = negs;
    negs[last] = keep;
    for i in 1..=m {
        let (xi, ci) = (format!("X{i}"), format!("C{i}"));
        let mut left: Vec<String> = (i + 1..=m).rev().map(|j| format!("X{j}")).collect();
        left.extend(["L".to_string(), "W".to_string()]);
        left.extend((1..i).map(|j| format!("Fr{j}")));
        left.push(xi.clone());
        lay.rearrange(b, &left)?;
        let x = lay.span(&xi)?;
        let c = lay.span(&ci)?;
        let n_i = negs[(i - 1) as usize];
        reflect(b, x, Span::new(-t, w), Span::new(c.start, n_i), Span::new(c.start + n_i, c.len - n_i))?;
        lay.replace(
            &[xi.as_str(), "A", ci.as_str()],
            vec![seg(format!("Fr{i}"), x.len), seg("A", w), seg(format!("P{i}"), x.len + n_i)],
        )?;
        let mut right: Vec<String> = (i + 1..=m).map(|j| format!("C{j}")).collect();
        right.extend((1..=i).rev().map(|j| format!("P{j}")));
        right.extend(["Z".to_string(), "R".to_string(), "J".to_string()]);
        lay.rearrange(b, &right)?;
    }
    b.close();

    b.open("centre");
    let mut right = vec!["Z".to_string(), "J".to_string()];
    right.extend((1..=m).rev().map(|j| format!("P{j}")));
    right.push("R".into());
    lay.rearrange(b, &right)?;
    shift(b, Span::new(-t, w), lay.span("Z")?, lay.span("J")?)?;
    let (lo, hi) = (b.lo(), b.hi());
    b.sort_region_decreasing(Span::new(lo, -t - lo))?;
    b.sort_region_decreasing(Span::new(t + 1, hi - t))?;
    b.close();

    b.close();
    Ok(())
}
