//! Planar point sets and the allowable sequences they determine.
//!
//! Points are projected onto a directed line that rotates counterclockwise
//! through half a turn. The starting direction is `(1, +0)`: infinitesimally
//! above the x-axis, so the initial projection order is the lexicographic
//! order on `(x, y)`. Ranks in that order are the values of the sequence.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num::{BigRational, Signed, ToPrimitive, Zero};

use crate::engine::{flip_imbalance, Trace};
use crate::error::{Error, Result};
use crate::seq::{CentredSequence, Flip, Window};

pub type Point = (BigRational, BigRational);

/// Distinct points labelled `1..=n` in the given order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, p) in points.iter().enumerate() {
            if !seen.insert(p.clone()) {
                return Err(Error::contract(format!("point {} repeats ({}, {})", i + 1, p.0, p.1)));
            }
        }
        Ok(PointSet { points })
    }

    pub fn from_integers(points: &[(i64, i64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(x, y)| (q(x), q(y))).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Point with 1-based label `l`.
    pub fn point(&self, l: usize) -> &Point {
        &self.points[l - 1]
    }
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn sub(a: &Point, b: &Point) -> Point {
    (&a.0 - &b.0, &a.1 - &b.1)
}

fn cross(u: &Point, v: &Point) -> BigRational {
    &u.0 * &v.1 - &u.1 * &v.0
}

/// Sign of the turn `a -> b -> c`: positive when `c` is left of `ab`.
pub fn orientation(a: &Point, b: &Point, c: &Point) -> i32 {
    let s = cross(&sub(b, a), &sub(c, a));
    if s.is_positive() {
        1
    } else if s.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapEvent {
    /// Disjoint flips on rank positions `1..=n`.
    pub flips: Vec<Flip>,
    /// Point labels on each flip's generating line, in the same order.
    pub lines: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct HalfPeriod {
    /// Point labels in initial projection order.
    pub initial: Vec<usize>,
    pub events: Vec<SwapEvent>,
}

impl HalfPeriod {
    /// The sequence on ranks `1..=n`, window `t = 0`.
    pub fn trace(&self) -> Trace {
        let n = self.initial.len() as i64;
        let steps = self.events.iter().map(|e| e.flips.clone()).collect();
        Trace::from_parts(
            CentredSequence::identity(1, n).expect("n >= 1"),
            Window::new(0).expect("t = 0"),
            steps,
            vec![],
        )
        .expect("events are nonempty")
    }

    pub fn transpositions(&self) -> usize {
        self.events
            .iter()
            .flat_map(|e| &e.flips)
            .map(|f| {
                let s = f.size() as usize;
                s * (s - 1) / 2
            })
            .sum()
    }
}

/// Direction of `b - a`, normalised to the half-plane `x > 0 or (x = 0, y > 0)`.
fn half_direction(a: &Point, b: &Point) -> Point {
    let v = sub(b, a);
    if v.0.is_negative() || (v.0.is_zero() && v.1.is_negative()) {
        (-v.0, -v.1)
    } else {
        v
    }
}

pub fn circular_sequence(ps: &PointSet) -> Result<HalfPeriod> {
    let n = ps.len();
    if n == 0 {
        return Err(Error::contract("empty point set"));
    }
    let mut order: Vec<usize> = (1..=n).collect();
    order.sort_by(|&a, &b| ps.point(a).cmp(ps.point(b)));

    // pairs by rank, direction from lower to higher rank
    let mut pairs: Vec<(Point, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..=n {
        for j in i + 1..=n {
            let (a, b) = (order[i - 1], order[j - 1]);
            pairs.push((half_direction(ps.point(a), ps.point(b)), i, j));
        }
    }
    // angles lie in (-90, 90] degrees, so the cross sign is a total preorder
    pairs.sort_by(|u, v| {
        let c = cross(&u.0, &v.0);
        if c.is_positive() {
            std::cmp::Ordering::Less
        } else if c.is_negative() {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });

    let mut perm: Vec<usize> = (1..=n).collect(); // position -> rank
    let mut pos: Vec<usize> = (0..=n).collect(); // rank -> position
    let mut events = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && cross(&pairs[i].0, &pairs[j].0).is_zero() {
            j += 1;
        }
        // union the pairs of this direction into collinear groups
        let mut parent: HashMap<usize, usize> = HashMap::new();
        fn find(p: &mut HashMap<usize, usize>, x: usize) -> usize {
            let up = *p.entry(x).or_insert(x);
            if up == x {
                return x;
            }
            let r = find(p, up);
            p.insert(x, r);
            r
        }
        for (_, a, b) in &pairs[i..j] {
            let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
            parent.insert(ra, rb);
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        let members: Vec<usize> = parent.keys().copied().collect();
        for x in members {
            let r = find(&mut parent, x);
            groups.entry(r).or_default().push(x);
        }
        let mut step: Vec<(Flip, Vec<usize>)> = Vec::new();
        for (_, g) in groups {
            let mut ps_: Vec<usize> = g.iter().map(|&r| pos[r]).collect();
            ps_.sort_unstable();
            let (c, d) = (ps_[0], *ps_.last().unwrap());
            if d - c + 1 != g.len() {
                return Err(Error::contract("collinear group is not contiguous in the projection order"));
            }
            if perm[c - 1..d].windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::contract("swap run is not increasing"));
            }
            let labels = perm[c - 1..d].iter().map(|&r| order[r - 1]).collect();
            step.push((Flip { c: c as i64, d: d as i64 }, labels));
        }
        step.sort_by_key(|s| s.0.c);
        for (f, _) in &step {
            let (c, d) = (f.c as usize, f.d as usize);
            perm[c - 1..d].reverse();
            for p in c..=d {
                pos[perm[p - 1]] = p;
            }
        }
        let (flips, lines) = step.into_iter().unzip();
        events.push(SwapEvent { flips, lines });
        i = j;
    }
    Ok(HalfPeriod { initial: order, events })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineRecord {
    /// Labels of the points on the line, ascending.
    pub labels: Vec<usize>,
    pub left: usize,
    pub right: usize,
}

impl LineRecord {
    pub fn imbalance(&self) -> usize {
        self.left.abs_diff(self.right)
    }
}

/// Every line through at least two points, with exact side counts, and the
/// minimum imbalance.
pub fn line_imbalances(ps: &PointSet) -> Result<(Vec<LineRecord>, usize)> {
    let n = ps.len();
    if n < 2 {
        return Err(Error::contract("need at least two points"));
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            let (pa, pb) = (ps.point(a), ps.point(b));
            let mut labels = Vec::new();
            let (mut left, mut right) = (0, 0);
            for c in 1..=n {
                match orientation(pa, pb, ps.point(c)) {
                    0 => labels.push(c),
                    1 => left += 1,
                    _ => right += 1,
                }
            }
            if seen.insert(labels.clone()) {
                out.push(LineRecord { labels, left, right });
            }
        }
    }
    let min = out.iter().map(LineRecord::imbalance).min().expect("n >= 2");
    Ok((out, min))
}

pub fn line_imbalance(ps: &PointSet, a: usize, b: usize) -> usize {
    let (pa, pb) = (ps.point(a), ps.point(b));
    let (mut left, mut right) = (0usize, 0usize);
    for c in 1..=ps.len() {
        match orientation(pa, pb, ps.point(c)) {
            1 => left += 1,
            -1 => right += 1,
            _ => {}
        }
    }
    left.abs_diff(right)
}

fn find_collinear(ps: &PointSet) -> Option<(usize, usize, usize)> {
    let n = ps.len();
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                if orientation(ps.point(a), ps.point(b), ps.point(c)) == 0 {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

/// For every swap event, the imbalance of the line through the two swapped
/// points equals `flip_imbalance(n, [a, b])`.
pub fn deviation_imbalance_link(ps: &PointSet) -> Result<bool> {
    if let Some((a, b, c)) = find_collinear(ps) {
        return Err(Error::contract(format!("points {a}, {b}, {c} are collinear")));
    }
    let n = ps.len() as i64;
    let hp = circular_sequence(ps)?;
    for e in &hp.events {
        for (f, line) in e.flips.iter().zip(&e.lines) {
            let want = flip_imbalance(n, f)? as usize;
            if line_imbalance(ps, line[0], line[1]) != want {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

const SVG_WIDTH: f64 = 800.0;
const LINEAR_STEPS: f64 = 1e4;

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#);
}

/// Step axis: linear up to 10^4 steps, logarithmic beyond.
fn step_axis(s: f64) -> f64 {
    if s <= LINEAR_STEPS {
        s
    } else {
        LINEAR_STEPS * (1.0 + (s / LINEAR_STEPS).ln())
    }
}

/// Wiring diagram: one polyline per element, x = step, y = position.
pub fn render_trace_svg(tr: &Trace) -> String {
    let init = tr.initial();
    let (lo, hi) = (init.lo(), init.hi());
    let n = init.len();
    let steps = tr.step_count() as f64;
    let unit = (600.0 / n.max(1) as f64).clamp(2.0, 24.0);
    let height = unit * (n as f64 + 1.0);
    let span = step_axis(steps).max(1.0);
    let x = |s: f64| 20.0 + (SVG_WIDTH - 40.0) * step_axis(s) / span;
    let y = |p: i64| unit * ((p - lo) as f64 + 1.0);

    let mut out = String::new();
    svg_open(&mut out, SVG_WIDTH, height);
    let t = tr.t();
    let (wl, wh) = (lo.max(-t), hi.min(t));
    if wl <= wh {
        let _ = writeln!(
            out,
            r##"<rect class="window" x="0" y="{:.2}" width="{SVG_WIDTH:.0}" height="{:.2}" fill="#f0d8d8"/>"##,
            y(wl) - unit / 2.0,
            unit * (wh - wl + 1) as f64
        );
    }
    let mut state: Vec<i64> = init.values().to_vec();
    let mut paths: HashMap<i64, Vec<(f64, f64)>> =
        state.iter().enumerate().map(|(i, &v)| (v, vec![(x(0.0), y(lo + i as i64))])).collect();
    for (s, step) in tr.steps().enumerate() {
        let s = s as f64;
        for f in step {
            let (a, b) = ((f.c - lo) as usize, (f.d - lo) as usize);
            if a > b || b >= state.len() {
                continue;
            }
            for i in a..=b {
                paths.get_mut(&state[i]).unwrap().push((x(s), y(lo + i as i64)));
            }
            state[a..=b].reverse();
            for i in a..=b {
                paths.get_mut(&state[i]).unwrap().push((x(s + 1.0), y(lo + i as i64)));
            }
        }
    }
    let mut values: Vec<i64> = state.clone();
    values.sort_unstable();
    for (i, &v) in state.iter().enumerate() {
        paths.get_mut(&v).unwrap().push((x(steps), y(lo + i as i64)));
    }
    for v in values {
        let pts: Vec<String> = paths[&v].iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="element" data-value="{v}" fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Points with labels; with `lines`, every determined line and its imbalance.
pub fn render_points_svg(ps: &PointSet, lines: bool) -> Result<String> {
    if ps.is_empty() {
        return Err(Error::contract("empty point set"));
    }
    let f = |v: &BigRational| v.to_f64().unwrap_or(0.0);
    let xs: Vec<(f64, f64)> = ps.points().iter().map(|(a, b)| (f(a), f(b))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(a, b) in &xs {
        x0 = x0.min(a);
        x1 = x1.max(a);
        y0 = y0.min(b);
        y1 = y1.max(b);
    }
    let size = (x1 - x0).max(y1 - y0).max(1e-9);
    let (pad, side) = (40.0, 600.0);
    let sx = |a: f64| pad + (a - x0) / size * side;
    let sy = |b: f64| pad + side - (b - y0) / size * side;
    let mut out = String::new();
    svg_open(&mut out, side + 2.0 * pad, side + 2.0 * pad);
    if lines {
        for rec in line_imbalances(ps)?.0 {
            let (p, q_) = (xs[rec.labels[0] - 1], xs[rec.labels[rec.labels.len() - 1] - 1]);
            let (dx, dy) = (q_.0 - p.0, q_.1 - p.1);
            let len = (dx * dx + dy * dy).sqrt();
            let (ux, uy) = (dx / len * size * 2.0, dy / len * size * 2.0);
            let _ = writeln!(
                out,
                r##"<line class="line" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#8888cc" stroke-width="0.5"/>"##,
                sx(p.0 - ux),
                sy(p.1 - uy),
                sx(q_.0 + ux),
                sy(q_.1 + uy)
            );
            let _ = writeln!(
                out,
                r##"<text class="imbalance" x="{:.2}" y="{:.2}" font-size="9" fill="#4444aa">{}</text>"##,
                sx((p.0 + q_.0) / 2.0),
                sy((p.1 + q_.1) / 2.0),
                rec.imbalance()
            );
        }
    }
    for (i, &(a, b)) in xs.iter().enumerate() {
        let _ = writeln!(out, r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, sx(a), sy(b));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, sx(a) + 6.0, sy(b) - 6.0, i + 1);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
