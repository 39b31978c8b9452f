//! Flip traces: recording, composite block moves and streaming verification.
//!
//! A [`TraceBuilder`] owns the current state and refuses to record any flip
//! that is not valid for its window. Composite moves (block swaps, decreasing
//! sorts) are expanded into primitive flips before recording, so a finished
//! [`Trace`] holds nothing but flips. [`Verifier`] replays a trace from
//! scratch and re-derives every property independently of the builder.

use num::rational::Ratio;

use crate::error::{Error, Result};
use crate::seq::{is_increasing, CentredSequence, Flip, Window};

/// Half-open run of positions `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: i64,
    pub len: i64,
}

impl Span {
    pub fn new(start: i64, len: i64) -> Self {
        debug_assert!(len >= 0);
        Span { start, len }
    }

    pub fn end(&self) -> i64 {
        self.start + self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationEvent {
    Open(String),
    Close(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub depth: usize,
    pub label: String,
    /// Step range `start..end` covered by the annotation.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    window: Window,
    initial: CentredSequence,
    flips: Vec<Flip>,
    step_count: usize,
    /// `(first flip index, length)` of every step with more than one flip;
    /// all other steps are single flips.
    multi: Vec<(usize, u32)>,
    /// Annotation events, each tagged with the number of steps emitted before it.
    events: Vec<(usize, AnnotationEvent)>,
}

impl Trace {
    pub fn new(initial: CentredSequence, window: Window) -> Self {
        Trace { window, initial, flips: Vec::new(), step_count: 0, multi: Vec::new(), events: Vec::new() }
    }

    /// Assemble a trace from raw parts, checking only structural consistency
    /// (step shape and annotation nesting), not flip validity.
    pub fn from_parts(
        initial: CentredSequence,
        window: Window,
        steps: Vec<Vec<Flip>>,
        events: Vec<(usize, AnnotationEvent)>,
    ) -> Result<Self> {
        let mut tr = Trace::new(initial, window);
        for s in steps {
            if s.is_empty() {
                return Err(Error::contract("empty step"));
            }
            tr.push_step(&s);
        }
        check_nesting(&events, tr.step_count())?;
        tr.events = events;
        Ok(tr)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn t(&self) -> i64 {
        self.window.t()
    }

    pub fn initial(&self) -> &CentredSequence {
        &self.initial
    }

    fn push_step(&mut self, s: &[Flip]) {
        if s.len() > 1 {
            self.multi.push((self.flips.len(), s.len() as u32));
        }
        self.flips.extend_from_slice(s);
        self.step_count += 1;
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn flip_count(&self) -> usize {
        self.flips.len()
    }

    pub fn flips(&self) -> &[Flip] {
        &self.flips
    }

    pub fn steps(&self) -> impl Iterator<Item = &[Flip]> + '_ {
        let (mut at, mut m) = (0usize, 0usize);
        (0..self.step_count).map(move |_| {
            let n = match self.multi.get(m) {
                Some(&(start, n)) if start == at => {
                    m += 1;
                    n as usize
                }
                _ => 1,
            };
            let s = &self.flips[at..at + n];
            at += n;
            s
        })
    }

    pub fn events(&self) -> &[(usize, AnnotationEvent)] {
        &self.events
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        let mut stack: Vec<(String, usize)> = Vec::new();
        let mut out = Vec::new();
        for (at, ev) in &self.events {
            match ev {
                AnnotationEvent::Open(label) => stack.push((label.clone(), *at)),
                AnnotationEvent::Close(_) => {
                    let (label, start) = stack.pop().expect("nesting checked on construction");
                    out.push(Annotation { depth: stack.len(), label, start, end: *at });
                }
            }
        }
        out
    }

    /// Final state after applying every step; fails on out-of-range flips.
    pub fn replay(&self) -> Result<CentredSequence> {
        let mut s = self.initial.clone();
        for f in &self.flips {
            s.apply_flip_mut(f)?;
        }
        Ok(s)
    }
}

fn check_nesting(events: &[(usize, AnnotationEvent)], steps: usize) -> Result<()> {
    let mut stack: Vec<&str> = Vec::new();
    let mut last = 0;
    for (at, ev) in events {
        if *at < last || *at > steps {
            return Err(Error::contract("annotation events out of order"));
        }
        last = *at;
        match ev {
            AnnotationEvent::Open(l) => stack.push(l),
            AnnotationEvent::Close(l) => match stack.pop() {
                Some(open) if open == l => {}
                _ => return Err(Error::contract(format!("unbalanced annotation close '{l}'"))),
            },
        }
    }
    if let Some(open) = stack.last() {
        return Err(Error::contract(format!("annotation '{open}' never closed")));
    }
    Ok(())
}

/// Single writer for a trace. Every recorded flip has been checked against the
/// current state and the window.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    trace: Trace,
    lo: i64,
    state: Vec<i64>,
    stack: Vec<String>,
}

impl TraceBuilder {
    pub fn new(initial: CentredSequence, window: Window) -> Self {
        let lo = initial.lo();
        let state = initial.values().to_vec();
        TraceBuilder { trace: Trace::new(initial, window), lo, state, stack: Vec::new() }
    }

    pub fn window(&self) -> Window {
        self.trace.window
    }

    pub fn t(&self) -> i64 {
        self.trace.window.t()
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.state.len() as i64 - 1
    }

    pub fn state(&self) -> &[i64] {
        &self.state
    }

    pub fn current(&self) -> CentredSequence {
        CentredSequence::new(self.lo, self.state.clone()).expect("flips preserve injectivity")
    }

    pub fn value(&self, p: i64) -> i64 {
        self.state[(p - self.lo) as usize]
    }

    pub fn values(&self, span: Span) -> &[i64] {
        let a = (span.start - self.lo) as usize;
        &self.state[a..a + span.len as usize]
    }

    pub fn flip_count(&self) -> usize {
        self.trace.flips.len()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn context(&self) -> Vec<String> {
        self.stack.clone()
    }

    pub fn open(&mut self, label: impl Into<String>) {
        let label = label.into();
        self.trace.events.push((self.trace.step_count(), AnnotationEvent::Open(label.clone())));
        self.stack.push(label);
    }

    pub fn close(&mut self) {
        if let Some(label) = self.stack.pop() {
            self.trace.events.push((self.trace.step_count(), AnnotationEvent::Close(label)));
        }
    }

    pub(crate) fn bug(&self, flip: Option<Flip>, reason: impl Into<String>) -> Error {
        Error::Construction { context: self.stack.clone(), flip, reason: reason.into() }
    }

    fn check(&self, f: &Flip) -> Result<()> {
        if f.c > f.d || f.c < self.lo || f.d > self.hi() {
            return Err(self.bug(Some(*f), "flip outside the domain"));
        }
        if self.trace.window.contains_midpoint(f) {
            return Err(self.bug(Some(*f), "midpoint inside the window"));
        }
        let a = (f.c - self.lo) as usize;
        let b = (f.d - self.lo) as usize;
        if !is_increasing(&self.state[a..=b]) {
            return Err(self.bug(Some(*f), "run is not increasing"));
        }
        Ok(())
    }

    fn apply(&mut self, f: &Flip) {
        let a = (f.c - self.lo) as usize;
        let b = (f.d - self.lo) as usize;
        self.state[a..=b].reverse();
    }

    /// Record one step of pairwise disjoint flips applied simultaneously.
    pub fn emit_step(&mut self, flips: &[Flip]) -> Result<()> {
        if flips.is_empty() {
            return Err(self.bug(None, "empty step"));
        }
        let mut sorted = flips.to_vec();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0].overlaps(&w[1]) {
                return Err(self.bug(Some(w[1]), "flips in one step overlap"));
            }
        }
        for f in flips {
            self.check(f)?;
        }
        for f in flips {
            self.apply(f);
        }
        self.trace.push_step(flips);
        Ok(())
    }

    pub fn flip(&mut self, f: Flip) -> Result<()> {
        self.check(&f)?;
        self.apply(&f);
        self.trace.flips.push(f);
        self.trace.step_count += 1;
        Ok(())
    }

    /// Exchange two adjacent blocks, `left` directly followed by `right`,
    /// keeping each block's internal order. Realised by size-2 flips: each
    /// element of `right`, leftmost first, bubbles leftward across `left`.
    pub fn swap_adjacent_blocks(&mut self, left: Span, right: Span) -> Result<()> {
        if left.end() != right.start {
            return Err(Error::contract("blocks to swap are not adjacent"));
        }
        if left.is_empty() || right.is_empty() {
            return Ok(());
        }
        let lmax = self.values(left).iter().copied().max().unwrap();
        let rmin = self.values(right).iter().copied().min().unwrap();
        if lmax > rmin {
            return Err(self.bug(
                None,
                format!(
                    "left block at {}..{} does not precede right block at {}..{}",
                    left.start,
                    left.end(),
                    right.start,
                    right.end()
                ),
            ));
        }
        for j in 0..right.len {
            let mut p = right.start + j - 1;
            while p >= left.start + j {
                self.flip(Flip::transposition(p))?;
                p -= 1;
            }
        }
        Ok(())
    }

    /// Bring the region into decreasing order by repeatedly flipping its
    /// maximal increasing runs.
    pub fn sort_region_decreasing(&mut self, region: Span) -> Result<()> {
        loop {
            let vals = self.values(region);
            let mut runs = Vec::new();
            let mut i = 0;
            while i < vals.len() {
                let mut j = i;
                while j + 1 < vals.len() && vals[j] < vals[j + 1] {
                    j += 1;
                }
                if j > i {
                    runs.push(Flip { c: region.start + i as i64, d: region.start + j as i64 });
                }
                i = j + 1;
            }
            if runs.is_empty() {
                return Ok(());
            }
            for f in runs {
                self.flip(f)?;
            }
        }
    }

    pub fn finish(mut self) -> Trace {
        while !self.stack.is_empty() {
            self.close();
        }
        self.trace
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyStep,
    OutOfRange,
    Overlap,
    NotIncreasing,
    InWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub step: usize,
    pub flip: Option<Flip>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    /// Every step is a set of disjoint, in-range, increasing runs.
    pub allowable: bool,
    /// Allowable and every flip's midpoint is outside the window.
    pub all_valid: bool,
    pub reaches_reversal: bool,
    /// Minimum over all flips of `|(c+d)/2 - (lo+hi)/2|`; `None` when there
    /// are no flips (the infinite sentinel).
    pub min_deviation: Option<Ratio<i64>>,
    pub step_count: usize,
    pub flip_count: usize,
    pub first_violation: Option<Violation>,
}

impl VerificationReport {
    /// `min_deviation > t`, treating the empty trace as passing.
    pub fn clears_window(&self, t: i64) -> bool {
        self.min_deviation.is_none_or(|d| d > Ratio::from_integer(t))
    }
}

/// Streaming replay: holds the current sequence and O(1) bookkeeping.
#[derive(Debug, Clone)]
pub struct Verifier {
    window: Window,
    lo: i64,
    initial: Vec<i64>,
    state: Vec<i64>,
    steps: usize,
    flips: usize,
    allowable: bool,
    in_window: bool,
    min_dev2: Option<i64>,
    first_violation: Option<Violation>,
}

impl Verifier {
    pub fn new(initial: &CentredSequence, window: Window) -> Self {
        Verifier {
            window,
            lo: initial.lo(),
            initial: initial.values().to_vec(),
            state: initial.values().to_vec(),
            steps: 0,
            flips: 0,
            allowable: true,
            in_window: false,
            min_dev2: None,
            first_violation: None,
        }
    }

    fn note(&mut self, flip: Option<Flip>, kind: ViolationKind) {
        if kind != ViolationKind::InWindow {
            self.allowable = false;
        } else {
            self.in_window = true;
        }
        if self.first_violation.is_none() {
            self.first_violation = Some(Violation { step: self.steps, flip, kind });
        }
    }

    pub fn push_step(&mut self, step: &[Flip]) {
        let hi = self.lo + self.state.len() as i64 - 1;
        if step.is_empty() {
            self.note(None, ViolationKind::EmptyStep);
        }
        let mut in_range = Vec::with_capacity(step.len());
        for f in step {
            if f.c > f.d || f.c < self.lo || f.d > hi {
                self.note(Some(*f), ViolationKind::OutOfRange);
            } else {
                in_range.push(*f);
            }
        }
        let mut order: Vec<Flip> = in_range.clone();
        order.sort();
        for w in order.windows(2) {
            if w[0].c <= w[1].d && w[1].c <= w[0].d {
                self.note(Some(w[1]), ViolationKind::Overlap);
            }
        }
        for f in &in_range {
            let run = &self.state[(f.c - self.lo) as usize..=(f.d - self.lo) as usize];
            if run.windows(2).any(|w| w[0] >= w[1]) {
                self.note(Some(*f), ViolationKind::NotIncreasing);
            }
            if (f.c + f.d).abs() <= 2 * self.window.t() {
                self.note(Some(*f), ViolationKind::InWindow);
            }
            let dev2 = (f.c + f.d - self.lo - hi).abs();
            self.min_dev2 = Some(self.min_dev2.map_or(dev2, |m| m.min(dev2)));
        }
        for f in &in_range {
            let (mut i, mut j) = ((f.c - self.lo) as usize, (f.d - self.lo) as usize);
            while i < j {
                self.state.swap(i, j);
                i += 1;
                j -= 1;
            }
        }
        self.steps += 1;
        self.flips += step.len();
    }

    pub fn state(&self) -> &[i64] {
        &self.state
    }

    pub fn finish(self) -> VerificationReport {
        let reaches_reversal = self.state.iter().eq(self.initial.iter().rev());
        VerificationReport {
            allowable: self.allowable,
            all_valid: self.allowable && !self.in_window,
            reaches_reversal,
            min_deviation: self.min_dev2.map(|d| Ratio::new(d, 2)),
            step_count: self.steps,
            flip_count: self.flips,
            first_violation: self.first_violation,
        }
    }
}

pub fn verify_trace(tr: &Trace) -> VerificationReport {
    let mut v = Verifier::new(tr.initial(), tr.window());
    for s in tr.steps() {
        v.push_step(s);
    }
    v.finish()
}

pub fn min_deviation(tr: &Trace) -> Result<Ratio<i64>> {
    let (lo, hi) = (tr.initial().lo(), tr.initial().hi());
    tr.flips()
        .iter()
        .map(|f| Ratio::new((f.c + f.d - lo - hi).abs(), 2))
        .min()
        .ok_or_else(|| Error::contract("trace has no flips"))
}

/// `|n - d - c + 1|`: the difference between the number of positions strictly
/// before `c` and strictly after `d` on the domain `[1, n]`.
pub fn flip_imbalance(n: i64, f: &Flip) -> Result<i64> {
    if f.c < 1 || f.d > n || f.c > f.d {
        return Err(Error::Range { c: f.c, d: f.d, lo: 1, hi: n });
    }
    Ok((n - f.d - f.c + 1).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(t: i64) -> Window {
        Window::new(t).unwrap()
    }

    fn fl(c: i64, d: i64) -> Flip {
        Flip::new(c, d).unwrap()
    }

    fn five_example() -> Trace {
        Trace::from_parts(
            CentredSequence::identity(1, 5).unwrap(),
            w(0),
            vec![
                vec![fl(1, 2), fl(4, 5)],
                vec![fl(2, 4)],
                vec![fl(1, 2), fl(4, 5)],
                vec![fl(2, 4)],
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn new_trace_is_empty() {
        let s = CentredSequence::identity(-3, 3).unwrap();
        let b = TraceBuilder::new(s.clone(), w(1));
        let tr = b.finish();
        assert_eq!(tr.step_count(), 0);
        assert!(tr.annotations().is_empty());
        assert_eq!(tr.replay().unwrap(), s);
    }

    #[test]
    fn emit_step_checks() {
        let id = CentredSequence::identity(-2, 2).unwrap();
        let mut b = TraceBuilder::new(id.clone(), w(0));
        b.emit_step(&[fl(1, 2)]).unwrap();
        b.emit_step(&[fl(-1, 0)]).unwrap();
        let mut b = TraceBuilder::new(id.clone(), w(1));
        assert!(matches!(b.emit_step(&[fl(0, 1)]), Err(Error::Construction { .. })));
        let mut b = TraceBuilder::new(id, w(0));
        b.emit_step(&[fl(1, 2), fl(-2, -1)]).unwrap();
        assert_eq!(b.state(), &[-1, -2, 0, 2, 1]);
        assert_eq!(b.trace().step_count(), 1);
        assert!(b.emit_step(&[fl(-2, -1), fl(-1, 0)]).is_err());
    }

    #[test]
    fn construction_error_carries_context() {
        let mut b = TraceBuilder::new(CentredSequence::identity(-2, 2).unwrap(), w(1));
        b.open("outer");
        b.open("inner");
        match b.flip(fl(0, 1)) {
            Err(Error::Construction { context, flip, .. }) => {
                assert_eq!(context, vec!["outer".to_string(), "inner".to_string()]);
                assert_eq!(flip, Some(fl(0, 1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn swap_blocks_schedule() {
        let s = CentredSequence::new(3, vec![1, 2, 5]).unwrap();
        let mut b = TraceBuilder::new(s, w(0));
        b.swap_adjacent_blocks(Span::new(3, 2), Span::new(5, 1)).unwrap();
        assert_eq!(b.trace().flips(), &[fl(4, 5), fl(3, 4)]);
        assert_eq!(b.state(), &[5, 1, 2]);
        b.swap_adjacent_blocks(Span::new(3, 0), Span::new(3, 3)).unwrap();
        assert_eq!(b.flip_count(), 2);

        let s = CentredSequence::new(0, vec![1, 2]).unwrap();
        let mut b = TraceBuilder::new(s, w(1));
        assert!(matches!(
            b.swap_adjacent_blocks(Span::new(0, 1), Span::new(1, 1)),
            Err(Error::Construction { .. })
        ));
    }

    #[test]
    fn swap_blocks_multi_element() {
        let s = CentredSequence::new(1, vec![1, 3, 2, 7, 5, 6]).unwrap();
        let mut b = TraceBuilder::new(s, w(0));
        b.swap_adjacent_blocks(Span::new(1, 3), Span::new(4, 3)).unwrap();
        assert_eq!(b.state(), &[7, 5, 6, 1, 3, 2]);
        assert_eq!(b.flip_count(), 9);
        assert!(verify_trace(&b.finish()).all_valid);
    }

    #[test]
    fn sort_region_cases() {
        let s = CentredSequence::new(1, vec![5, 4, 3]).unwrap();
        let mut b = TraceBuilder::new(s, w(0));
        b.sort_region_decreasing(Span::new(1, 3)).unwrap();
        assert_eq!(b.flip_count(), 0);

        let s = CentredSequence::new(2, vec![1, 2, 3, 4]).unwrap();
        let mut b = TraceBuilder::new(s, w(1));
        b.sort_region_decreasing(Span::new(2, 4)).unwrap();
        assert_eq!(b.trace().flips(), &[fl(2, 5)]);
        assert_eq!(b.state(), &[4, 3, 2, 1]);
    }

    #[test]
    fn five_example_verifies() {
        let tr = five_example();
        assert_eq!(tr.replay().unwrap().values(), &[5, 4, 3, 2, 1]);
        let rep = verify_trace(&tr);
        assert!(rep.allowable);
        assert!(rep.reaches_reversal);
        assert_eq!(rep.min_deviation, Some(Ratio::from_integer(0)));
        assert_eq!((rep.step_count, rep.flip_count), (4, 6));
        assert_eq!(min_deviation(&tr).unwrap(), Ratio::from_integer(0));
    }

    #[test]
    fn verify_empty_and_violations() {
        let tr = Trace::new(CentredSequence::identity(1, 1).unwrap(), w(0));
        let rep = verify_trace(&tr);
        assert!(rep.reaches_reversal);
        assert_eq!(rep.min_deviation, None);
        assert!(min_deviation(&tr).is_err());

        let tr = Trace::from_parts(
            CentredSequence::identity(1, 4).unwrap(),
            w(0),
            vec![vec![fl(1, 2), fl(2, 3)], vec![fl(1, 2)], vec![fl(3, 9)]],
            vec![],
        )
        .unwrap();
        let rep = verify_trace(&tr);
        assert!(!rep.allowable);
        assert_eq!(rep.first_violation.unwrap().kind, ViolationKind::Overlap);
    }

    #[test]
    fn window_violation_is_not_an_allowability_failure() {
        let tr = Trace::from_parts(
            CentredSequence::identity(-1, 1).unwrap(),
            w(1),
            vec![vec![fl(-1, 1)]],
            vec![],
        )
        .unwrap();
        let rep = verify_trace(&tr);
        assert!(rep.allowable && rep.reaches_reversal);
        assert!(!rep.all_valid);
        assert_eq!(rep.first_violation.unwrap().kind, ViolationKind::InWindow);
    }

    #[test]
    fn min_deviation_examples() {
        let tr = Trace::from_parts(
            CentredSequence::identity(1, 5).unwrap(),
            w(0),
            vec![vec![fl(1, 2)]],
            vec![],
        )
        .unwrap();
        assert_eq!(min_deviation(&tr).unwrap(), Ratio::new(3, 2));
        assert_eq!(verify_trace(&tr).min_deviation, Some(Ratio::new(3, 2)));
    }

    #[test]
    fn imbalance_examples() {
        assert_eq!(flip_imbalance(5, &fl(1, 2)).unwrap(), 3);
        assert_eq!(flip_imbalance(5, &fl(2, 4)).unwrap(), 0);
        assert!(flip_imbalance(5, &fl(0, 2)).is_err());
        for n in 1..=12i64 {
            for c in 1..=n {
                for d in c..=n {
                    let f = fl(c, d);
                    let imb = flip_imbalance(n, &f).unwrap();
                    let dev = Ratio::new((c + d - 1 - n).abs(), 2);
                    assert_eq!(Ratio::from_integer(imb), dev * 2);
                    assert_eq!(imb.rem_euclid(2), (n - f.size()).rem_euclid(2));
                }
            }
        }
    }

    #[test]
    fn annotations_nest() {
        let mut b = TraceBuilder::new(CentredSequence::identity(-3, 3).unwrap(), w(0));
        b.open("a");
        b.flip(fl(1, 2)).unwrap();
        b.open("b");
        b.flip(fl(2, 3)).unwrap();
        b.close();
        b.close();
        let ann = b.finish().annotations();
        assert_eq!(ann.len(), 2);
        assert_eq!((ann[0].label.as_str(), ann[0].depth, ann[0].start, ann[0].end), ("b", 1, 1, 2));
        assert_eq!((ann[1].label.as_str(), ann[1].depth, ann[1].start, ann[1].end), ("a", 0, 0, 2));

        let bad = vec![(0, AnnotationEvent::Open("x".into()))];
        assert!(Trace::from_parts(CentredSequence::identity(0, 1).unwrap(), w(0), vec![], bad).is_err());
    }
}
