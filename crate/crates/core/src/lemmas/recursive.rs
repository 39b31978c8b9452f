//! The recursive step: from `X I Y` to `L W A B R` with a balanced `B`.
//!
//! Level 0 is a single reflection. Level `k + 1` runs level `k` on `d`
//! consecutive slices of `X` and `Y` (step 1), moves the tails of the `W`
//! pieces into place one `Y'` segment at a time (step 2), and finally sorts
//! the single-element pieces into the tail of the new `W` with mirrored
//! reflections and a mirrored shift (step 3).

use std::collections::{HashMap, HashSet};

use num::{BigInt, BigRational, ToPrimitive};

use super::layout::{seg, Layout, Seg, View};
use super::plan::{big_t, plan_sizes, recursive_sizes, singles, RecurrenceTable};
use super::shift::{reflect_view, shift_view};
use crate::engine::{Span, Trace, TraceBuilder};
use crate::error::{Error, Result};
use crate::seq::{greedy_partition, is_decreasing, is_increasing, is_r_balanced, precedes, Block, CentredSequence, Flip, Window};

/// Refuse runs whose domain would exceed this many positions.
pub const DEFAULT_MAX_CELLS: u64 = 100_000_000;

/// Lengths of `L W A B R` around the window, `A` being `2t + 1` long.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepLengths {
    pub l: i64,
    pub w: i64,
    pub b: i64,
    pub r: i64,
}

impl StepLengths {
    pub fn spans(&self, t: i64) -> StepSpans {
        let start = -t - self.l - self.w;
        StepSpans {
            l: Span::new(start, self.l),
            w: Span::new(start + self.l, self.w),
            a: Span::new(-t, 2 * t + 1),
            b: Span::new(t + 1, self.b),
            r: Span::new(t + 1 + self.b, self.r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSpans {
    pub l: Span,
    pub w: Span,
    pub a: Span,
    pub b: Span,
    pub r: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub index: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub t: i64,
    pub d: i64,
    pub k: u64,
    pub n: u64,
    pub x_len: i64,
    pub y_len: i64,
    pub spans: StepSpans,
    pub certificates: Vec<Certificate>,
    pub plan: RecurrenceTable,
    pub trace: Trace,
}

impl StepOutcome {
    pub fn all_pass(&self) -> bool {
        self.certificates.len() == 8 && self.certificates.iter().all(|c| c.pass)
    }
}

pub(crate) struct Ctx {
    t: i64,
    tt: i64,
    d: i64,
    big_d: BigInt,
    sizes: HashMap<(u64, u64), (i64, i64)>,
}

impl Ctx {
    pub(crate) fn new(t: i64, d: i64) -> Result<Self> {
        let tt = big_t(t as u32).to_i64().ok_or_else(|| Error::Refused("T does not fit in 64 bits".into()))?;
        if d < 9 * tt {
            return Err(Error::contract(format!("d = {d} must be at least 9T = {}", 9 * tt)));
        }
        Ok(Ctx { t, tt, d, big_d: BigInt::from(d), sizes: HashMap::new() })
    }

    pub(crate) fn sizes(&mut self, k: u64, n: u64) -> Result<(i64, i64)> {
        if let Some(&s) = self.sizes.get(&(k, n)) {
            return Ok(s);
        }
        let (x, y) = recursive_sizes(self.t as u32, &self.big_d, k, n)?;
        let fit = |v: BigInt| v.to_i64().ok_or_else(|| Error::Refused("sizes do not fit in 64 bits".into()));
        let s = (fit(x)?, fit(y)?);
        self.sizes.insert((k, n), s);
        Ok(s)
    }

    fn singles(&self, level: u64) -> Result<i64> {
        singles(self.t as u32, &self.big_d, level)
            .to_i64()
            .ok_or_else(|| Error::Refused("p does not fit in 64 bits".into()))
    }
}

fn names(prefix: &str, range: impl Iterator<Item = i64>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

fn cat(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn without(list: &[String], drop: &[String]) -> Vec<String> {
    let drop: HashSet<&String> = drop.iter().collect();
    list.iter().filter(|n| !drop.contains(n)).cloned().collect()
}

/// Run the step in place; the window must hold `I`, with `X` directly left
/// and `Y` directly right of it.
pub(crate) fn run_step(b: &mut TraceBuilder, ctx: &mut Ctx, k: u64, n: u64) -> Result<StepLengths> {
    b.open(format!("step k={k} n={n}"));
    let out = if k == 0 { base_case(b, ctx, n)? } else { level(b, ctx, k, n)? };
    b.close();
    Ok(out)
}

fn base_case(b: &mut TraceBuilder, ctx: &mut Ctx, n: u64) -> Result<StepLengths> {
    let (t, tt) = (ctx.t, ctx.tt);
    let x_len = n as i64 + 1;
    let b_len = tt + 4 * t + 2;
    reflect_view(&mut View::new(b, false), x_len, b_len)?;
    let e = Span::new(t + 1, x_len + b_len);
    let positives = b.values(e).iter().filter(|&&v| v > 0).count() as i64;
    Ok(StepLengths { l: 0, w: x_len, b: positives, r: e.len - positives })
}

fn level(b: &mut TraceBuilder, ctx: &mut Ctx, k: u64, n: u64) -> Result<StepLengths> {
    let (t, tt, d) = (ctx.t, ctx.tt, ctx.d);
    let w = 2 * t + 1;
    let (x_len, y_len) = ctx.sizes(k, n)?;
    let (xs, ys) = ctx.sizes(k - 1, n + 1)?;
    let m = ctx.d.checked_pow((k - 1) as u32).ok_or_else(|| Error::Refused("d^k overflows".into()))?;
    let p = ctx.singles(k)?;
    let md = m * d;
    let s_len = tt + d + 4 * t + 2;
    let yp_len = y_len - d * ys;
    if yp_len != m * s_len + p || x_len != d * xs + p + w {
        return Err(b.bug(None, "planner sizes disagree with the layout"));
    }

    let p_names = names("P", (1..=d).rev());
    let q_names = names("Q", 1..=d);
    let mut segs = vec![seg("X'", p + w)];
    segs.extend(p_names.iter().map(|s| seg(s.as_str(), xs)));
    segs.push(seg("A", w));
    segs.extend(q_names.iter().map(|s| seg(s.as_str(), ys)));
    segs.push(seg("Y'", yp_len));
    let mut lay = Layout::new(-t - x_len, segs);

    // Step 1: the induction hypothesis on each P_i I Q_i.
    b.open("step1");
    for i in 1..=d {
        let sub = run_step(b, ctx, k - 1, n + 1)?;
        let pi = format!("P{i}");
        let qi = format!("Q{i}");
        lay.replace(
            &[pi.as_str(), "A", qi.as_str()],
            vec![
                seg(format!("L{i}"), sub.l),
                seg(format!("W{i}"), sub.w),
                seg("A", w),
                seg(format!("B{i}"), sub.b),
                seg(format!("R{i}"), sub.r),
            ],
        )?;
        let left = cat(&[
            &names("L", 1..=i),
            &["X'".to_string()],
            &names("W", 1..=i),
            &names("P", (i + 1..=d).rev()),
        ]);
        lay.rearrange(b, &left)?;
        let right = cat(&[
            &names("Q", i + 1..=d),
            &names("B", (1..=i).rev()),
            &["Y'".to_string()],
            &names("R", (1..=i).rev()),
        ]);
        lay.rearrange(b, &right)?;
    }
    b.close();

    // Step 2: move the tails of the W pieces behind U'' blocks taken from Y'.
    b.open("step2");
    let mut k_all = Vec::new();
    for i in 1..=d {
        let mut parts: Vec<Seg> = (1..=m).map(|j| seg(format!("K{i}_{j}"), n as i64 + 1)).collect();
        parts.extend((1..=m).rev().map(|j| seg(format!("M{i}_{j}"), 1)));
        lay.split(&format!("W{i}"), parts)?;
        k_all.extend(names(&format!("K{i}_"), 1..=m));
    }
    let mut yparts = Vec::new();
    for j in 1..=m {
        yparts.push(seg(format!("T{j}"), tt));
        yparts.push(seg(format!("J{j}"), w));
        yparts.push(seg(format!("U{j}"), w));
        yparts.push(seg(format!("V{j}"), d));
    }
    yparts.push(seg("Y''", p));
    lay.split("Y'", yparts)?;
    let l_names = names("L", 1..=d);
    let mut m_order = Vec::new();
    for j in (1..=m).rev() {
        m_order.extend((1..=d).map(|i| format!("M{i}_{j}")));
    }
    lay.rearrange(b, &cat(&[&l_names, &["X'".to_string()], &k_all, &m_order]))?;

    let mut r_prime = names("R", (1..=d).rev());
    for j in 1..=m {
        let group = vec![format!("T{j}"), format!("J{j}"), format!("U{j}"), format!("V{j}")];
        let after = lay.names_after("A")?;
        lay.rearrange(b, &cat(&[&group, &without(&after, &group)]))?;

        let (tj, jj) = (format!("T{j}"), format!("J{j}"));
        shift_view(&mut View::new(b, false), -t, tt)?;
        let cj = format!("C{j}");
        lay.replace(&["A", tj.as_str(), jj.as_str()], vec![seg("A", w), seg(cj.as_str(), tt + w)])?;
        let c_span = lay.span(&cj)?;
        let pos = b.values(c_span).iter().filter(|&&v| v > 0).count() as i64;
        let cn = format!("Cn{j}");
        lay.split(&cj, vec![seg(cj.as_str(), pos), seg(cn.as_str(), c_span.len - pos)])?;
        let after = lay.names_after("A")?;
        let rest = without(&after, &[cn.clone()]);
        let cut = rest.iter().position(|s| s == &r_prime[0]).unwrap_or(rest.len());
        lay.rearrange(b, &cat(&[&rest[..cut], &[cn.clone()], &rest[cut..]]))?;
        r_prime.insert(0, cn);

        let (uj, vj) = (format!("U{j}"), format!("V{j}"));
        let after = lay.names_after("A")?;
        let front = vec![uj.clone(), vj.clone(), cj.clone()];
        lay.rearrange(b, &cat(&[&front, &without(&after, &front)]))?;

        let ms: Vec<String> = (1..=d).map(|i| format!("M{i}_{j}")).collect();
        let before = lay.names_before("A")?;
        if before[before.len() - d as usize..] != ms[..] {
            return Err(b.bug(None, format!("singles M_{j} are not next to the window")));
        }
        b.flip(Flip { c: -d - t, d: d + 3 * t + 1 })?;
        let mut old = ms.clone();
        old.extend(["A".to_string(), uj, vj]);
        lay.replace(
            &old,
            vec![seg(format!("V{j}"), d), seg("A", w), seg(format!("Jr{j}"), w), seg(format!("N{j}"), d)],
        )?;
        let before = lay.names_before("A")?;
        let front = cat(&[&l_names, &names("V", 1..=j)]);
        lay.rearrange(b, &cat(&[&front, &without(&before, &front)]))?;
    }
    b.close();

    // Step 3: form the tail of the new W.
    b.open("step3");
    let n_i = n as i64;
    let pp_names = names("PP", (1..=p).rev());
    let mut xparts = vec![seg("X''", w)];
    xparts.extend(pp_names.iter().map(|s| seg(s.as_str(), 1)));
    lay.split("X'", xparts)?;
    let mut kp_names = Vec::with_capacity(md as usize);
    let mut g = 0;
    for kn in &k_all {
        g += 1;
        lay.split(kn, vec![seg(format!("{kn}'"), n_i), seg(format!("O{g}"), 1)])?;
        kp_names.push(format!("{kn}'"));
    }
    let qq_names = names("QQ", 1..=p);
    lay.split("Y''", qq_names.iter().map(|s| seg(s.as_str(), 1)).collect())?;

    let f_len = md - p * (tt + 4 * t + 2);
    let h_len = tt + w;
    let mut next = 1;
    let mut take = |len: i64| {
        let v = names("O", next..next + len);
        next += len;
        v
    };
    let f_os = take(f_len);
    let mut gh = Vec::new();
    for i in (1..=p).rev() {
        gh.push((i, take(w), take(h_len)));
    }
    let v_names = names("V", 1..=m);
    let mut left = cat(&[&l_names, &v_names, &kp_names, &["X''".to_string()], &f_os]);
    for (i, gs, hs) in &gh {
        left.push(format!("PP{i}"));
        left.extend(gs.iter().cloned());
        left.extend(hs.iter().cloned());
    }
    lay.rearrange(b, &left)?;
    lay.merge(&cat(&[&l_names, &v_names]), "Lp")?;
    lay.merge(&kp_names, "W''")?;
    lay.merge(&f_os, "F")?;
    for (i, gs, hs) in &gh {
        lay.merge(gs, &format!("G{i}"))?;
        lay.merge(hs, &format!("H{i}"))?;
    }
    let after = lay.names_after("A")?;
    lay.rearrange(b, &cat(&[&qq_names, &without(&after, &qq_names)]))?;

    let mut done_left: Vec<String> = Vec::new();
    for i in 1..=p {
        reflect_view(&mut View::new(b, true), 1, tt + 4 * t + 2)?;
        let prev = if i == 1 { format!("U{m}") } else { format!("Gr{}", i - 1) };
        let (ppi, gi, hi, qqi) = (format!("PP{i}"), format!("G{i}"), format!("H{i}"), format!("QQ{i}"));
        lay.replace(
            &[ppi.as_str(), gi.as_str(), hi.as_str(), "A", qqi.as_str()],
            vec![seg(qqi.as_str(), 1), seg(prev.as_str(), w), seg(format!("Hr{i}"), h_len), seg("A", w), seg(ppi.as_str(), 1)],
        )?;
        if i > 1 {
            done_left.push(prev.clone());
        }
        done_left.push(format!("Hr{i}"));
        let mut target = cat(&[&["Lp".to_string()], &names("QQ", 1..=i), &[format!("U{m}"), "W''".to_string()], &done_left]);
        target.push("X''".into());
        target.push("F".into());
        for j in (i + 1..=p).rev() {
            target.extend([format!("PP{j}"), format!("G{j}"), format!("H{j}")]);
        }
        lay.rearrange(b, &target)?;
        let after = lay.names_after("A")?;
        let front = cat(&[&names("QQ", i + 1..=p), &names("PP", (1..=i).rev())]);
        lay.rearrange(b, &cat(&[&front, &without(&after, &front)]))?;
    }
    shift_view(&mut View::new(b, true), -t, f_len)?;
    lay.replace(&["X''", "F", "A"], vec![seg("D", f_len + w), seg("A", w)])?;
    b.close();

    let l_part = cat(&[&["Lp".to_string()], &qq_names, &[format!("U{m}")]]);
    let l = lay.span_of(&l_part)?.len;
    let before = lay.names_before("A")?;
    let w_part = without(&before, &l_part);
    let wl = lay.span_of(&w_part)?.len;
    let r = lay.span_of(&r_prime)?.len;
    let after = lay.names_after("A")?;
    let bl = lay.span_of(&without(&after, &r_prime))?.len;
    Ok(StepLengths { l, w: wl, b: bl, r })
}

fn cert(index: u8, name: &'static str, pass: bool, detail: impl Into<String>) -> Certificate {
    Certificate { index, name, pass, detail: detail.into() }
}

/// The eight conditions on a finished step, checked on concrete values.
pub(crate) fn certify(
    state: &CentredSequence,
    sp: &StepSpans,
    t: i64,
    k: u64,
    n: u64,
    m: u64,
    y_values: &HashSet<i64>,
    plan: &RecurrenceTable,
) -> Vec<Certificate> {
    let vals = |s: Span| -> Vec<i64> { (s.start..s.end()).map(|p| state.get(p).unwrap_or(0)).collect() };
    let (l, wv, a, bv, r) = (vals(sp.l), vals(sp.w), vals(sp.a), vals(sp.b), vals(sp.r));
    let mut out = Vec::with_capacity(8);

    out.push(cert(
        1,
        "window",
        sp.a == Span::new(-t, 2 * t + 1) && a.len() as i64 == 2 * t + 1,
        format!("A on [{},{}]", sp.a.start, sp.a.end() - 1),
    ));

    let signs = l.iter().chain(&wv).all(|&v| v > 0) && r.iter().all(|&v| v < 0);
    out.push(cert(2, "signs", signs, format!("|L|={} |W|={} |R|={}", l.len(), wv.len(), r.len())));

    let orient = if bv.is_empty() {
        true
    } else if k == 0 {
        precedes(&bv, &a).unwrap_or(false)
    } else {
        precedes(&a, &bv).unwrap_or(false)
    };
    out.push(cert(3, "orientation", orient, if k == 0 { "A > B" } else { "A < B" }));

    let from_y = wv.iter().all(|v| y_values.contains(v));
    out.push(cert(4, "provenance", from_y, "W drawn from Y"));

    out.push(shape_certificate(&wv, m as usize, n as usize));

    let (pos, neg): (Vec<i64>, Vec<i64>) = bv.iter().partition(|&&v| v > 0);
    let width = greedy_partition(&pos).width();
    let entry = &plan.levels[k as usize];
    out.push(cert(
        6,
        "width",
        BigInt::from(width) <= entry.alpha,
        format!("width(B+)={width} alpha={}", entry.alpha),
    ));
    out.push(cert(
        7,
        "negatives",
        BigRational::from_integer(BigInt::from(neg.len())) >= entry.beta,
        format!("|B-|={} beta={}", neg.len(), entry.beta),
    ));
    let ratio = entry.beta.clone() / BigRational::from_integer(entry.alpha.clone());
    let balanced = Block::new(bv.clone())
        .and_then(|blk| is_r_balanced(&blk, &ratio))
        .map(|rep| rep.balanced)
        .unwrap_or(false);
    out.push(cert(8, "balance", balanced, format!("r={ratio}")));
    out
}

fn shape_certificate(wv: &[i64], m: usize, n: usize) -> Certificate {
    let fail = |why: String| cert(5, "shape", false, why);
    if wv.len() != m * (n + 1) {
        return fail(format!("|W|={} but m(n+1)={}", wv.len(), m * (n + 1)));
    }
    let ks: Vec<&[i64]> = wv[..m * n].chunks(n).collect();
    // singles appear as M_m, ..., M_1
    let ms: Vec<i64> = wv[m * n..].iter().rev().copied().collect();
    for (i, kb) in ks.iter().enumerate() {
        if !is_decreasing(kb) {
            return fail(format!("K_{} is not decreasing", i + 1));
        }
        if kb.iter().min() <= Some(&ms[i]) {
            return fail(format!("K_{} does not exceed M_{}", i + 1, i + 1));
        }
        if i > 0 && ks[i - 1].iter().max() >= Some(&ms[i]) {
            return fail(format!("M_{} does not exceed K_{}", i + 1, i));
        }
    }
    cert(5, "shape", true, format!("m={m} n={n}"))
}

/// Identity-like start on `[-b, b]`: positions left of the window keep their
/// value, the rest are raised by `2t + 1`, so `X < 0`, `I = t+1..3t+1` and
/// `I < Y`.
pub(crate) fn padded_start(t: i64, half: i64) -> CentredSequence {
    let values = (-half..=half).map(|p| if p < -t { p } else { p + 2 * t + 1 }).collect();
    CentredSequence::new(-half, values).expect("padded start is injective")
}

pub fn recursive_step(t: i64, d: i64, k: u64, n: u64) -> Result<StepOutcome> {
    recursive_step_with_limit(t, d, k, n, DEFAULT_MAX_CELLS)
}

pub fn recursive_step_with_limit(t: i64, d: i64, k: u64, n: u64, max_cells: u64) -> Result<StepOutcome> {
    if t < 0 || n < 1 {
        return Err(Error::contract("need t >= 0 and n >= 1"));
    }
    let mut ctx = Ctx::new(t, d)?;
    let plan = plan_sizes(t as u32, &BigInt::from(d), k, n)?;
    let (x, y) = match (&plan.x, &plan.y) {
        (Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => return Err(Error::Refused("sizes too large to materialise".into())),
    };
    let half = BigInt::from(t) + x.clone().max(y.clone());
    let cells = BigInt::from(2) * &half + 1;
    if cells > BigInt::from(max_cells) {
        return Err(Error::Refused(format!("{cells} cells exceed the limit of {max_cells}")));
    }
    let (x_len, y_len) = ctx.sizes(k, n)?;
    let half = half.to_i64().unwrap();
    let start = padded_start(t, half);
    let y_values: HashSet<i64> = (t + 1..=t + y_len).map(|p| p + 2 * t + 1).collect();
    debug_assert!(is_increasing(start.values()));
    let mut b = TraceBuilder::new(start, Window::new(t)?);
    let lens = run_step(&mut b, &mut ctx, k, n)?;
    let spans = lens.spans(t);
    let m = (d as u64).pow(k as u32);
    let certificates = certify(&b.current(), &spans, t, k, n, m, &y_values, &plan);
    if lens.l + lens.w != x_len || lens.b + lens.r != y_len {
        return Err(b.bug(None, "final layout does not cover X and Y"));
    }
    Ok(StepOutcome { t, d, k, n, x_len, y_len, spans, certificates, plan, trace: b.finish() })
}
