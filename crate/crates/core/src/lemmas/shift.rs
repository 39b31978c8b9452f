//! Shifting a block into the window and reflecting a block across it.
//!
//! All spans are in real positions. The plain variants expect the moving
//! blocks on the right of the window (`A B C` with `A = [-t, t]`); the
//! mirrored variants expect the mirror image (`C B A`).

use num::ToPrimitive;

use super::layout::View;
use super::plan::{big_t, shift_threshold};
use crate::engine::{Span, TraceBuilder};
use crate::error::{Error, Result};
use crate::seq::{is_increasing, precedes};

fn mirror_span(s: Span) -> Span {
    Span::new(-(s.end() - 1), s.len)
}

fn window_span(t: i64) -> Span {
    Span::new(-t, 2 * t + 1)
}

pub(crate) fn min_shift_len(t: i64) -> i64 {
    big_t(t as u32).to_i64().unwrap_or(i64::MAX)
}

pub(crate) fn min_reflect_len(t: i64) -> i64 {
    min_shift_len(t).saturating_add(4 * t + 2)
}

fn check_window(v: &View, a: Span) -> Result<()> {
    if a != window_span(v.t()) {
        return Err(Error::contract(format!("A must occupy the window [{},{}]", -v.t(), v.t())));
    }
    Ok(())
}

fn check_adjacent(names: &[(&str, Span)]) -> Result<()> {
    for w in names.windows(2) {
        if w[0].1.end() != w[1].1.start {
            return Err(Error::contract(format!("{} must immediately follow {}", w[1].0, w[0].0)));
        }
    }
    Ok(())
}

fn check_domain(v: &View, s: Span, name: &str) -> Result<()> {
    if !v.in_domain(s) {
        return Err(Error::contract(format!("{name} lies outside the domain")));
    }
    Ok(())
}

fn check_increasing(v: &View, s: Span, name: &str) -> Result<()> {
    if !is_increasing(&v.values(s)) {
        return Err(Error::contract(format!("{name} must be increasing")));
    }
    Ok(())
}

fn check_precedes(v: &View, a: Span, b: Span, what: &str) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Ok(());
    }
    if !precedes(&v.values(a), &v.values(b))? {
        return Err(Error::contract(format!("{what} must hold")));
    }
    Ok(())
}

fn shift_pre(v: &View, a: Span, b: Span, c: Span) -> Result<()> {
    let t = v.t();
    check_window(v, a)?;
    check_adjacent(&[("A", a), ("B", b), ("C", c)])?;
    check_domain(v, c, "C")?;
    if b.len < min_shift_len(t) {
        return Err(Error::contract(format!("|B| = {} is below 3^(2t) = {}", b.len, min_shift_len(t))));
    }
    if c.len != 2 * t + 1 {
        return Err(Error::contract(format!("|C| = {} must equal 2t+1 = {}", c.len, 2 * t + 1)));
    }
    check_increasing(v, b, "B")?;
    check_precedes(v, a, b, "A < B")?;
    check_precedes(v, b, c, "B < C")
}

/// `A B C -> C D` in view coordinates, for A on `[k, t]`.
pub(crate) fn shift_view(v: &mut View, k: i64, b_len: i64) -> Result<()> {
    let t = v.t();
    if k == t {
        return v.flip(t, t + b_len + 1);
    }
    let l = t - k;
    let n1 = shift_threshold(t as u32, k + 1) as i64;
    let b4 = b_len - n1 - 2 * l;
    if b4 < n1 {
        return Err(v.bug(format!("shift level {k}: |B| = {b_len} too short")));
    }
    let s = t + 1;
    // A' B1 B2 -> B2 E1
    shift_view(v, k + 1, n1)?;
    let e1 = Span::new(s, n1 + l);
    let b3 = Span::new(e1.end(), l);
    v.swap_blocks(e1, b3)?;
    let e1 = Span::new(s + l, n1 + l);
    let e1b4 = Span::new(e1.start, e1.len + b4);
    let c1 = Span::new(e1b4.end(), 1);
    v.swap_blocks(e1b4, c1)?;
    v.flip(k, 2 * t - k + 1)?;
    let e2 = Span::new(s, 2 * l + 1 + n1);
    v.sort_decreasing(e2)?;
    v.swap_blocks(e2, Span::new(e2.end(), b4 + l))?;
    shift_view(v, k + 1, b4)
}

fn shift_in(b: &mut TraceBuilder, mirrored: bool, a: Span, bs: Span, c: Span) -> Result<()> {
    let mut v = View::new(b, mirrored);
    shift_pre(&v, a, bs, c)?;
    let t = v.t();
    v.builder().open(if mirrored { "shift_mirrored" } else { "shift" });
    shift_view(&mut v, -t, bs.len)?;
    v.builder().close();
    Ok(())
}

/// `A B C -> C D`: C ends on the window, D is decreasing on its right.
pub fn shift(b: &mut TraceBuilder, a: Span, bs: Span, c: Span) -> Result<()> {
    shift_in(b, false, a, bs, c)
}

/// Mirror image of [`shift`]: `C B A -> D C` with the spans given in real
/// positions, C leftmost.
pub fn shift_mirrored(b: &mut TraceBuilder, c: Span, bs: Span, a: Span) -> Result<()> {
    shift_in(b, true, mirror_span(a), mirror_span(bs), mirror_span(c))
}

fn reflect_pre(v: &View, x: Span, a: Span, b: Span, c: Span) -> Result<()> {
    let t = v.t();
    check_window(v, a)?;
    check_adjacent(&[("X", x), ("A", a), ("B", b), ("C", c)])?;
    check_domain(v, x, "X")?;
    check_domain(v, c, "C")?;
    if b.len < min_reflect_len(t) {
        return Err(Error::contract(format!(
            "|B| = {} is below 3^(2t)+4t+2 = {}",
            b.len,
            min_reflect_len(t)
        )));
    }
    if c.len != x.len {
        return Err(Error::contract(format!("|C| = {} must equal |X| = {}", c.len, x.len)));
    }
    if x.is_empty() {
        return Err(Error::contract("X must be non-empty"));
    }
    check_increasing(v, b, "B")?;
    check_increasing(v, c, "C")?;
    check_increasing(v, x, "X")?;
    check_precedes(v, x, a, "X < A")?;
    check_precedes(v, a, b, "A < B")?;
    check_precedes(v, b, c, "B < C")
}

/// `X A B C -> C' D E` in view coordinates with A on the window.
pub(crate) fn reflect_view(v: &mut View, x_len: i64, b_len: i64) -> Result<()> {
    let t = v.t();
    let w = 2 * t + 1;
    let b1 = b_len - 2 * w;
    shift_view(v, -t, b1)?;
    let d1 = Span::new(t + 1, b1 + w);
    v.swap_blocks(d1, Span::new(d1.end(), w + x_len))?;
    v.flip(-t - x_len, 3 * t + 1 + x_len)?;
    let xr = Span::new(t + 1 + w, x_len);
    v.swap_blocks(xr, Span::new(xr.end(), b1 + w))
}

fn reflect_in(b: &mut TraceBuilder, mirrored: bool, x: Span, a: Span, bs: Span, c: Span) -> Result<()> {
    let mut v = View::new(b, mirrored);
    reflect_pre(&v, x, a, bs, c)?;
    v.builder().open(if mirrored { "reflect_mirrored" } else { "reflect" });
    reflect_view(&mut v, x.len, bs.len)?;
    v.builder().close();
    Ok(())
}

/// `X A B C -> C̄ D E`: the window ends up holding the last `2t+1` values of
/// B reversed and E, on the right, is decreasing.
pub fn reflect(b: &mut TraceBuilder, x: Span, a: Span, bs: Span, c: Span) -> Result<()> {
    reflect_in(b, false, x, a, bs, c)
}

/// Mirror image of [`reflect`]: `C B A X -> E D C̄`, spans in real positions.
pub fn reflect_mirrored(b: &mut TraceBuilder, c: Span, bs: Span, a: Span, x: Span) -> Result<()> {
    reflect_in(b, true, mirror_span(x), mirror_span(a), mirror_span(bs), mirror_span(c))
}
