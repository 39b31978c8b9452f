//! Position bookkeeping for the lemma procedures.
//!
//! [`View`] looks at a builder either directly or through the horizontal and
//! vertical mirror `p -> -p`, `v -> -v`. Under that mirror an increasing run
//! stays increasing and the window `[-t, t]` maps onto itself, so every
//! procedure written for blocks on the right of the window also works, unchanged,
//! for the mirrored configuration on the left.
//!
//! [`Layout`] names the consecutive regions of a stretch of positions so that
//! the construction can be written as "move these blocks into this order".

use std::collections::{HashMap, HashSet};

use crate::engine::{Span, TraceBuilder};
use crate::error::{Error, Result};
use crate::seq::Flip;

pub(crate) struct View<'a> {
    b: &'a mut TraceBuilder,
    mirrored: bool,
}

impl<'a> View<'a> {
    pub(crate) fn new(b: &'a mut TraceBuilder, mirrored: bool) -> Self {
        View { b, mirrored }
    }

    pub(crate) fn t(&self) -> i64 {
        self.b.t()
    }

    pub(crate) fn builder(&mut self) -> &mut TraceBuilder {
        self.b
    }

    fn real_span(&self, s: Span) -> Span {
        if self.mirrored {
            Span::new(-(s.end() - 1), s.len)
        } else {
            s
        }
    }

    pub(crate) fn in_domain(&self, s: Span) -> bool {
        let r = self.real_span(s);
        s.is_empty() || (r.start >= self.b.lo() && r.end() - 1 <= self.b.hi())
    }

    pub(crate) fn values(&self, s: Span) -> Vec<i64> {
        if self.mirrored {
            let r = self.real_span(s);
            self.b.values(r).iter().rev().map(|v| -v).collect()
        } else {
            self.b.values(s).to_vec()
        }
    }

    pub(crate) fn flip(&mut self, c: i64, d: i64) -> Result<()> {
        let f = if self.mirrored { Flip { c: -d, d: -c } } else { Flip { c, d } };
        self.b.flip(f)
    }

    pub(crate) fn swap_blocks(&mut self, left: Span, right: Span) -> Result<()> {
        if self.mirrored {
            let (l, r) = (self.real_span(right), self.real_span(left));
            self.b.swap_adjacent_blocks(l, r)
        } else {
            self.b.swap_adjacent_blocks(left, right)
        }
    }

    pub(crate) fn sort_decreasing(&mut self, s: Span) -> Result<()> {
        let r = self.real_span(s);
        self.b.sort_region_decreasing(r)
    }

    pub(crate) fn bug(&self, reason: impl Into<String>) -> Error {
        self.b.bug(None, reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Seg {
    pub name: String,
    pub len: i64,
}

pub(crate) fn seg(name: impl Into<String>, len: i64) -> Seg {
    Seg { name: name.into(), len }
}

/// Named consecutive regions starting at `start` (real coordinates).
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub start: i64,
    pub segs: Vec<Seg>,
}

impl Layout {
    pub(crate) fn new(start: i64, segs: Vec<Seg>) -> Self {
        Layout { start, segs }
    }

    pub(crate) fn index(&self, name: &str) -> Result<usize> {
        self.segs
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::contract(format!("layout has no region '{name}'")))
    }

    pub(crate) fn len_of(&self, name: &str) -> Result<i64> {
        Ok(self.segs[self.index(name)?].len)
    }

    pub(crate) fn span(&self, name: &str) -> Result<Span> {
        let i = self.index(name)?;
        let start = self.start + self.segs[..i].iter().map(|s| s.len).sum::<i64>();
        Ok(Span::new(start, self.segs[i].len))
    }

    /// Span covering the named regions, which must be consecutive.
    pub(crate) fn span_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Span> {
        let range = self.run(names)?;
        let first = self.span(&self.segs[range.start].name)?;
        let len = self.segs[range.clone()].iter().map(|s| s.len).sum();
        Ok(Span::new(first.start, len))
    }

    /// Index range of a consecutive run of named regions, in any order.
    fn run<S: AsRef<str>>(&self, names: &[S]) -> Result<std::ops::Range<usize>> {
        let wanted: HashSet<&str> = names.iter().map(|n| n.as_ref()).collect();
        let idx: Vec<usize> = (0..self.segs.len()).filter(|&i| wanted.contains(self.segs[i].name.as_str())).collect();
        if idx.len() != names.len() || idx.is_empty() {
            return Err(Error::contract("layout regions missing or repeated"));
        }
        let (lo, hi) = (idx[0], *idx.last().unwrap());
        if hi - lo + 1 != idx.len() {
            return Err(Error::contract("regions are not consecutive"));
        }
        Ok(lo..hi + 1)
    }

    /// Replace a consecutive run of regions (given in layout order) by new
    /// regions of the same total length.
    pub(crate) fn replace<S: AsRef<str>>(&mut self, names: &[S], parts: Vec<Seg>) -> Result<()> {
        let range = self.run(names)?;
        for (k, n) in names.iter().enumerate() {
            if self.segs[range.start + k].name != n.as_ref() {
                return Err(Error::contract("regions to replace are not in layout order"));
            }
        }
        let old: i64 = self.segs[range.clone()].iter().map(|s| s.len).sum();
        let new: i64 = parts.iter().map(|s| s.len).sum();
        if old != new {
            return Err(Error::contract(format!("replacement changes length {old} -> {new}")));
        }
        self.segs.splice(range, parts);
        Ok(())
    }

    pub(crate) fn split(&mut self, name: &str, parts: Vec<Seg>) -> Result<()> {
        self.replace(&[name], parts)
    }

    pub(crate) fn merge<S: AsRef<str>>(&mut self, names: &[S], into: &str) -> Result<()> {
        let len = names.iter().map(|n| self.len_of(n.as_ref())).sum::<Result<i64>>()?;
        self.replace(names, vec![seg(into, len)])
    }

    /// Names of the regions strictly before / after `name`.
    pub(crate) fn names_before(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name)?;
        Ok(self.segs[..i].iter().map(|s| s.name.clone()).collect())
    }

    pub(crate) fn names_after(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name)?;
        Ok(self.segs[i + 1..].iter().map(|s| s.name.clone()).collect())
    }

    /// Reorder a consecutive run of regions into `target` by adjacent block
    /// swaps. Every pair of regions whose relative order changes must already
    /// be in increasing value order, otherwise the builder reports the bug.
    pub(crate) fn rearrange<S: AsRef<str>>(&mut self, b: &mut TraceBuilder, target: &[S]) -> Result<()> {
        if target.is_empty() {
            return Ok(());
        }
        let range = self.run(target)?;
        let rank: HashMap<&str, usize> = target.iter().enumerate().map(|(i, n)| (n.as_ref(), i)).collect();
        let mut ranks: Vec<usize> = self.segs[range.clone()].iter().map(|s| rank[s.name.as_str()]).collect();
        let mut segs: Vec<Seg> = self.segs[range.clone()].to_vec();
        let base = self.start + self.segs[..range.start].iter().map(|s| s.len).sum::<i64>();
        let mut pos: Vec<i64> = Vec::with_capacity(segs.len());
        let mut acc = base;
        for s in &segs {
            pos.push(acc);
            acc += s.len;
        }
        for j in 1..segs.len() {
            let mut i = j;
            while i > 0 && ranks[i - 1] > ranks[i] {
                let left = Span::new(pos[i - 1], segs[i - 1].len);
                let right = Span::new(left.end(), segs[i].len);
                b.swap_adjacent_blocks(left, right)?;
                segs.swap(i - 1, i);
                ranks.swap(i - 1, i);
                pos[i] = pos[i - 1] + segs[i - 1].len;
                i -= 1;
            }
        }
        self.segs.splice(range, segs);
        Ok(())
    }

    pub(crate) fn total(&self) -> i64 {
        self.segs.iter().map(|s| s.len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::verify_trace;
    use crate::seq::{CentredSequence, Window};

    #[test]
    fn rearrange_moves_blocks() {
        // a=(1,2) b=(5) c=(3,4) -> b a c requires a < b only.
        let s = CentredSequence::new(1, vec![1, 2, 5, 3, 4]).unwrap();
        let mut b = TraceBuilder::new(s, Window::new(0).unwrap());
        let mut l = Layout::new(1, vec![seg("a", 2), seg("b", 1), seg("c", 2)]);
        l.rearrange(&mut b, &["b", "a", "c"]).unwrap();
        assert_eq!(b.state(), &[5, 1, 2, 3, 4]);
        assert_eq!(l.span("c").unwrap(), Span::new(4, 2));
        assert!(l.rearrange(&mut b, &["c", "b"]).is_err());
        assert!(verify_trace(&b.finish()).all_valid);
    }

    #[test]
    fn mirrored_view_translates_flips() {
        let s = CentredSequence::identity(-3, 3).unwrap();
        let mut b = TraceBuilder::new(s, Window::new(0).unwrap());
        {
            let mut v = View::new(&mut b, true);
            // view values are -real(-p): identity again
            assert_eq!(v.values(Span::new(1, 3)), vec![1, 2, 3]);
            v.flip(2, 3).unwrap();
        }
        assert_eq!(b.trace().flips(), &[Flip { c: -3, d: -2 }]);
        assert_eq!(b.state()[..2], [-2, -3]);
    }

    #[test]
    fn replace_and_merge() {
        let mut l = Layout::new(-2, vec![seg("x", 2), seg("y", 3)]);
        l.split("y", vec![seg("y1", 1), seg("y2", 2)]).unwrap();
        assert_eq!(l.span("y2").unwrap(), Span::new(1, 2));
        assert!(l.replace(&["y2", "y1"], vec![seg("z", 3)]).is_err());
        l.merge(&["x", "y1"], "w").unwrap();
        assert_eq!(l.span("w").unwrap(), Span::new(-2, 3));
        assert_eq!(l.total(), 5);
        assert!(l.split("w", vec![seg("q", 1)]).is_err());
    }
}
