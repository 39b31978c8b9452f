//! Line-oriented text formats.
//!
//! Trace file:
//!
//! ```text
//! ALLOWSEQ v1
//! t=<t> lo=<lo> hi=<hi>
//! <initial values, space separated>
//! F c d                 one flip
//! S c1 d1 c2 d2 ...     several disjoint flips in one step
//! # <depth> <label>     annotation opens before the next step
//! # <depth> /<label>    annotation closes
//! ```
//!
//! Point file: one `x y` pair per line, each coordinate an integer or `p/q`;
//! `#` starts a comment.

use std::io::{BufRead, Write};

use num::{BigInt, BigRational, Zero};

use crate::engine::{AnnotationEvent, Trace};
use crate::error::{Error, Result};
use crate::seq::{CentredSequence, Flip, Window};

pub const MAGIC: &str = "ALLOWSEQ v1";

fn io_err(e: std::io::Error) -> Error {
    Error::Parse { line: 0, msg: format!("i/o error: {e}") }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn write_header<W: Write>(out: &mut W, initial: &CentredSequence, window: Window) -> Result<()> {
    writeln!(out, "{MAGIC}").map_err(io_err)?;
    writeln!(out, "t={} lo={} hi={}", window.t(), initial.lo(), initial.hi()).map_err(io_err)?;
    let vals: Vec<String> = initial.values().iter().map(|v| v.to_string()).collect();
    writeln!(out, "{}", vals.join(" ")).map_err(io_err)
}

pub fn write_step<W: Write>(out: &mut W, step: &[Flip]) -> Result<()> {
    if let [f] = step {
        writeln!(out, "F {} {}", f.c, f.d).map_err(io_err)
    } else {
        let mut s = String::from("S");
        for f in step {
            s.push_str(&format!(" {} {}", f.c, f.d));
        }
        writeln!(out, "{s}").map_err(io_err)
    }
}

fn write_event<W: Write>(out: &mut W, depth: usize, ev: &AnnotationEvent) -> Result<()> {
    let (label, close) = match ev {
        AnnotationEvent::Open(l) => (l, false),
        AnnotationEvent::Close(l) => (l, true),
    };
    if label.starts_with('/') || label.contains('\n') || label.is_empty() {
        return Err(Error::contract(format!("annotation label {label:?} cannot be written")));
    }
    writeln!(out, "# {depth} {}{label}", if close { "/" } else { "" }).map_err(io_err)
}

pub fn write_trace<W: Write>(out: &mut W, tr: &Trace) -> Result<()> {
    write_header(out, tr.initial(), tr.window())?;
    let events = tr.events();
    let mut ev = 0;
    let mut depth = 0usize;
    let flush = |out: &mut W, upto: usize, ev: &mut usize, depth: &mut usize| -> Result<()> {
        while *ev < events.len() && events[*ev].0 <= upto {
            let e = &events[*ev].1;
            if matches!(e, AnnotationEvent::Close(_)) {
                *depth -= 1;
            }
            write_event(out, *depth, e)?;
            if matches!(e, AnnotationEvent::Open(_)) {
                *depth += 1;
            }
            *ev += 1;
        }
        Ok(())
    };
    for (i, step) in tr.steps().enumerate() {
        flush(out, i, &mut ev, &mut depth)?;
        write_step(out, step)?;
    }
    flush(out, tr.step_count(), &mut ev, &mut depth)
}

pub fn trace_to_string(tr: &Trace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(&mut buf, tr)?;
    Ok(String::from_utf8(buf).expect("trace text is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Step(Vec<Flip>),
    Event(AnnotationEvent),
}

/// Incremental reader: the header is parsed on construction, then steps and
/// annotation events are returned one line at a time.
pub struct TraceReader<R: BufRead> {
    input: R,
    line_no: usize,
    buf: String,
    window: Window,
    initial: CentredSequence,
    depth: usize,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut buf = String::new();
        let mut line_no = 0;
        let mut next = |buf: &mut String, what: &str| -> Result<usize> {
            buf.clear();
            line_no += 1;
            if input.read_line(buf).map_err(io_err)? == 0 {
                return Err(parse_err(line_no, format!("missing {what}")));
            }
            Ok(line_no)
        };
        let ln = next(&mut buf, "header")?;
        if buf.trim_end() != MAGIC {
            return Err(parse_err(ln, format!("expected '{MAGIC}'")));
        }
        let ln = next(&mut buf, "parameter line")?;
        let (t, lo, hi) = parse_params(buf.trim_end()).map_err(|m| parse_err(ln, m))?;
        let ln = next(&mut buf, "initial values")?;
        let values = buf
            .split_whitespace()
            .map(|w| w.parse::<i64>().map_err(|_| parse_err(ln, format!("bad value '{w}'"))))
            .collect::<Result<Vec<_>>>()?;
        if hi < lo || values.len() as i64 != hi - lo + 1 {
            return Err(parse_err(ln, format!("expected {} values for [{lo},{hi}]", hi - lo + 1)));
        }
        let initial = CentredSequence::new(lo, values).map_err(|e| parse_err(ln, e.to_string()))?;
        let window = Window::new(t).map_err(|e| parse_err(2, e.to_string()))?;
        Ok(TraceReader { input, line_no, buf: String::new(), window, initial, depth: 0 })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn initial(&self) -> &CentredSequence {
        &self.initial
    }

    pub fn line(&self) -> usize {
        self.line_no
    }

    pub fn next_item(&mut self) -> Result<Option<Item>> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            if self.input.read_line(&mut self.buf).map_err(io_err)? == 0 {
                if self.depth != 0 {
                    return Err(parse_err(self.line_no, "annotation left open at end of file"));
                }
                return Ok(None);
            }
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            let ln = self.line_no;
            if let Some(rest) = line.strip_prefix("# ") {
                let (d, label) = rest.split_once(' ').ok_or_else(|| parse_err(ln, "annotation needs depth and label"))?;
                let d: usize = d.parse().map_err(|_| parse_err(ln, format!("bad depth '{d}'")))?;
                if label.is_empty() || label == "/" {
                    return Err(parse_err(ln, "empty annotation label"));
                }
                let ev = match label.strip_prefix('/') {
                    Some(l) => {
                        if self.depth == 0 || d != self.depth - 1 {
                            return Err(parse_err(ln, "annotation close does not match an open"));
                        }
                        self.depth -= 1;
                        AnnotationEvent::Close(l.to_string())
                    }
                    None => {
                        if d != self.depth {
                            return Err(parse_err(ln, format!("annotation depth {d}, expected {}", self.depth)));
                        }
                        self.depth += 1;
                        AnnotationEvent::Open(label.to_string())
                    }
                };
                return Ok(Some(Item::Event(ev)));
            }
            let mut words = line.split_whitespace();
            let kind = words.next().unwrap();
            let nums = words
                .map(|w| w.parse::<i64>().map_err(|_| parse_err(ln, format!("bad integer '{w}'"))))
                .collect::<Result<Vec<_>>>()?;
            let flips: Vec<Flip> = match kind {
                "F" if nums.len() == 2 => vec![Flip { c: nums[0], d: nums[1] }],
                "S" if nums.len() >= 4 && nums.len() % 2 == 0 => {
                    nums.chunks(2).map(|p| Flip { c: p[0], d: p[1] }).collect()
                }
                "F" | "S" => return Err(parse_err(ln, format!("wrong number of endpoints for '{kind}'"))),
                _ => return Err(parse_err(ln, format!("unknown line kind '{kind}'"))),
            };
            if flips.iter().any(|f| f.c > f.d) {
                return Err(parse_err(ln, "flip with c > d"));
            }
            return Ok(Some(Item::Step(flips)));
        }
    }
}

fn parse_params(line: &str) -> std::result::Result<(i64, i64, i64), String> {
    let mut t = None;
    let mut lo = None;
    let mut hi = None;
    for w in line.split_whitespace() {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("bad parameter '{w}'"))?;
        let v: i64 = v.parse().map_err(|_| format!("bad integer in '{w}'"))?;
        match k {
            "t" => t = Some(v),
            "lo" => lo = Some(v),
            "hi" => hi = Some(v),
            _ => return Err(format!("unknown parameter '{k}'")),
        }
    }
    match (t, lo, hi) {
        (Some(t), Some(lo), Some(hi)) => Ok((t, lo, hi)),
        _ => Err("parameter line needs t, lo and hi".into()),
    }
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Trace> {
    let mut r = TraceReader::new(input)?;
    let mut steps = Vec::new();
    let mut events = Vec::new();
    while let Some(item) = r.next_item()? {
        match item {
            Item::Step(s) => steps.push(s),
            Item::Event(e) => events.push((steps.len(), e)),
        }
    }
    let line = r.line();
    Trace::from_parts(r.initial.clone(), r.window, steps, events).map_err(|e| parse_err(line, e.to_string()))
}

pub fn parse_trace(text: &str) -> Result<Trace> {
    read_trace(text.as_bytes())
}

pub fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let bad = || format!("bad coordinate '{s}'");
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.parse().map_err(|_| bad())?;
            let q: BigInt = q.parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(format!("zero denominator in '{s}'"));
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Points as exact rationals, in file order.
pub fn parse_points(text: &str) -> Result<Vec<(BigRational, BigRational)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let ws: Vec<&str> = line.split_whitespace().collect();
        if ws.len() != 2 {
            return Err(parse_err(i + 1, "expected 'x y'"));
        }
        let x = parse_rational(ws[0]).map_err(|m| parse_err(i + 1, m))?;
        let y = parse_rational(ws[1]).map_err(|m| parse_err(i + 1, m))?;
        out.push((x, y));
    }
    Ok(out)
}

pub fn format_points(points: &[(BigRational, BigRational)]) -> String {
    points.iter().map(|(x, y)| format!("{x} {y}\n")).collect()
}
