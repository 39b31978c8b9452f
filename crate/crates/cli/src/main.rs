use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use allowseq_core::engine::{verify_trace, Span, Trace, TraceBuilder, VerificationReport, Verifier};
use allowseq_core::format::{parse_points, read_trace, write_trace, Item, TraceReader, MAGIC};
use allowseq_core::geom::{
    circular_sequence, deviation_imbalance_link, line_imbalances, render_points_svg, render_trace_svg, PointSet,
};
use allowseq_core::lemmas::plan::{big_t, plan_sizes};
use allowseq_core::lemmas::{
    full_construction_with_limit, recursive_step_with_limit, reflect, shift, FullOutcome, StageFailure,
};
use allowseq_core::oracle::{search_best_deviation, SearchMode, DEFAULT_SEARCH_LIMIT};
use allowseq_core::seq::{CentredSequence, Window};
use allowseq_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use num::{BigInt, ToPrimitive};

const EXIT_OK: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_REFUSED: u8 = 3;

#[derive(Parser)]
#[command(name = "allowseq", version, about = "Allowable sequences with flips kept off the centre")]
struct Cli {
    /// Print reports as key=value lines.
    #[arg(long, global = true)]
    machine: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Shift,
    Reflect,
    Step,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Single,
    Multi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PointAction {
    Sequence,
    Imbalance,
    Link,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a construction stage and write its trace.
    Construct {
        #[arg(long, value_enum)]
        stage: Stage,
        #[arg(long, default_value_t = 0)]
        t: i64,
        /// Defaults to 9T for the step and 100T^3 for the full construction.
        #[arg(long)]
        d: Option<i64>,
        /// Defaults to 1 for the step and d for the full construction.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// Length of B for shift and reflect; defaults to the minimum.
        #[arg(long)]
        b_len: Option<i64>,
        /// Length of X and C for reflect.
        #[arg(long, default_value_t = 1)]
        x_len: i64,
        /// Print the recurrence table instead of materialising.
        #[arg(long)]
        plan: bool,
        #[arg(long, env = "ALLOWSEQ_MAX_CELLS", default_value_t = 100_000_000)]
        max_cells: u64,
        /// Allow d < 9T in plan mode.
        #[arg(long)]
        unchecked: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a trace file.
    Verify {
        path: PathBuf,
        /// Also require every flip midpoint outside the window and the
        /// minimum deviation about the centre to exceed t.
        #[arg(long)]
        strict: bool,
    },
    /// Exhaustive search for the best minimum deviation on 1..n.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Single)]
        mode: Mode,
        /// Lift the default guard of n <= 8.
        #[arg(long)]
        allow_large: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Point-set computations.
    Points {
        path: PathBuf,
        #[arg(long, value_enum)]
        action: PointAction,
    },
    /// Render a trace or point file as SVG.
    Render {
        path: PathBuf,
        /// Draw every determined line for point files.
        #[arg(long)]
        lines: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

type Outcome = std::result::Result<u8, Failure>;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Refused(_) => EXIT_REFUSED,
            Error::Construction { .. } => EXIT_VIOLATION,
            _ => EXIT_INPUT,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn input_err(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, msg: msg.into() }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    input_err(format!("{}: {e}", path.display()))
}

/// Report lines: `key: value`, or `key=value` with `--machine`.
struct Report {
    machine: bool,
    rows: Vec<(String, String)>,
}

impl Report {
    fn new(machine: bool) -> Self {
        Report { machine, rows: Vec::new() }
    }

    fn put(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.rows.push((k.to_string(), v.to_string().replace('\n', " ")));
        self
    }

    fn print(&self) {
        let mut out = std::io::stdout().lock();
        for (k, v) in &self.rows {
            let _ = if self.machine { writeln!(out, "{k}={v}") } else { writeln!(out, "{k}: {v}") };
        }
    }
}

fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn put_verification(r: &mut Report, rep: &VerificationReport) {
    r.put("allowable", yes(rep.allowable))
        .put("valid", yes(rep.all_valid))
        .put("reversal", yes(rep.reaches_reversal))
        .put("min_deviation", rep.min_deviation.map_or("none".to_string(), |d| d.to_string()))
        .put("steps", rep.step_count)
        .put("flips", rep.flip_count);
    if let Some(v) = &rep.first_violation {
        let flip = v.flip.map_or(String::new(), |f| format!(" flip {f}"));
        r.put("first_violation", format!("step {} {:?}{flip}", v.step + 1, v.kind));
    }
}

fn write_text(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io_fail(path, e))
}

fn write_trace_file(path: Option<&Path>, tr: &Trace) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| io_fail(p, e))?;
            let mut w = BufWriter::new(f);
            write_trace(&mut w, tr)?;
            w.flush().map_err(|e| io_fail(p, e))
        }
        None => {
            let mut w = BufWriter::new(std::io::stdout().lock());
            write_trace(&mut w, tr)?;
            w.flush().map_err(|e| input_err(e.to_string()))
        }
    }
}

/// Streaming verification of a trace file.
fn verify_path(path: &Path) -> std::result::Result<(VerificationReport, i64), Failure> {
    let f = File::open(path).map_err(|e| io_fail(path, e))?;
    let mut reader = TraceReader::new(BufReader::new(f))?;
    let t = reader.window().t();
    let mut v = Verifier::new(reader.initial(), reader.window());
    while let Some(item) = reader.next_item()? {
        if let Item::Step(s) = item {
            v.push_step(&s);
        }
    }
    Ok((v.finish(), t))
}

/// Extend the domain to `[-h, h]` with untouched values below and above, so
/// that deviation about the centre is distance from position 0.
fn symmetric(tr: &Trace) -> Trace {
    let init = tr.initial();
    let h = init.lo().abs().max(init.hi().abs());
    let (min, max) = (*init.values().iter().min().unwrap(), *init.values().iter().max().unwrap());
    let mut values: Vec<i64> = (0..init.lo() + h).map(|i| min - (init.lo() + h) + i).collect();
    values.extend_from_slice(init.values());
    values.extend((1..=h - init.hi()).map(|i| max + i));
    let steps = tr.steps().map(|s| s.to_vec()).collect();
    Trace::from_parts(CentredSequence::new(-h, values).unwrap(), tr.window(), steps, tr.events().to_vec()).unwrap()
}

fn identity_builder(t: i64, lo: i64, hi: i64) -> std::result::Result<TraceBuilder, Failure> {
    Ok(TraceBuilder::new(CentredSequence::identity(lo, hi)?, Window::new(t)?))
}

/// Write, then re-read the file and require it to verify.
fn emit_checked(output: Option<&Path>, tr: &Trace, r: &mut Report) -> std::result::Result<(), Failure> {
    write_trace_file(output, tr)?;
    let rep = match output {
        Some(p) => verify_path(p)?.0,
        None => verify_trace(tr),
    };
    if !rep.allowable {
        return Err(Failure { code: EXIT_VIOLATION, msg: "written trace failed self-verification".into() });
    }
    put_verification(r, &rep);
    Ok(())
}

fn put_failure(r: &mut Report, f: &StageFailure) {
    r.put("status", "failed")
        .put("failed_stage", &f.stage)
        .put("reason", &f.reason)
        .put("planned_ratio", &f.planned_ratio)
        .put("required_ratio", &f.required_ratio)
        .put("achieved_ratio", f.achieved_ratio.as_ref().map_or("unmeasured".to_string(), |a| a.to_string()));
    if !f.context.is_empty() {
        r.put("context", f.context.join(" > "));
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    machine: bool,
    stage: Stage,
    t: i64,
    d: Option<i64>,
    k: Option<u64>,
    n: u64,
    b_len: Option<i64>,
    x_len: i64,
    plan: bool,
    max_cells: u64,
    unchecked: bool,
    output: Option<&Path>,
) -> Outcome {
    if !(0..=20).contains(&t) {
        return Err(input_err("t must be in 0..=20"));
    }
    let tt = big_t(t as u32).to_i64().unwrap_or(i64::MAX);
    let w = 2 * t + 1;
    let started = Instant::now();
    let mut r = Report::new(machine);
    r.put("stage", ["shift", "reflect", "step", "full"][stage as usize]).put("t", t);

    let needs_d = matches!(stage, Stage::Step | Stage::Full);
    let d = match (needs_d, d) {
        (false, _) => 0,
        (true, Some(d)) => d,
        (true, None) if stage == Stage::Step => 9 * tt,
        (true, None) => 100 * tt.pow(3),
    };
    let k = k.unwrap_or(if stage == Stage::Full { d.max(0) as u64 } else { 1 });
    if needs_d {
        r.put("d", d).put("k", k);
        if d < 1 {
            return Err(input_err("d must be positive"));
        }
        if d < 9 * tt && !(plan && unchecked) {
            return Err(input_err(format!("d = {d} is below 9T = {}", 9 * tt)));
        }
    }
    if plan {
        if !needs_d {
            return Err(input_err("--plan applies to the step and full stages"));
        }
        let nn = if stage == Stage::Full { 1 } else { n };
        let table = plan_sizes(t as u32, &BigInt::from(d), k, nn)?;
        stdout(&table.to_text());
        return Ok(if stage == Stage::Full && !table.certifies_full() { EXIT_VIOLATION } else { EXIT_OK });
    }

    let mut code = EXIT_OK;
    let trace = match stage {
        Stage::Shift => {
            let bl = b_len.unwrap_or(3i64.pow(2 * t as u32));
            let mut b = identity_builder(t, -t, t + bl + w)?;
            shift(&mut b, Span::new(-t, w), Span::new(t + 1, bl), Span::new(t + 1 + bl, w))?;
            r.put("b_len", bl);
            symmetric(&b.finish())
        }
        Stage::Reflect => {
            let bl = b_len.unwrap_or(3i64.pow(2 * t as u32) + 4 * t + 2);
            let mut b = identity_builder(t, -t - x_len, t + bl + x_len)?;
            let bs = Span::new(t + 1, bl);
            reflect(&mut b, Span::new(-t - x_len, x_len), Span::new(-t, w), bs, Span::new(bs.end(), x_len))?;
            r.put("b_len", bl).put("x_len", x_len);
            symmetric(&b.finish())
        }
        Stage::Step => {
            let out = recursive_step_with_limit(t, d, k, n, max_cells)?;
            r.put("n", n).put("x_len", out.x_len).put("y_len", out.y_len);
            for c in &out.certificates {
                r.put(&format!("certificate_{}", c.index), format!("{} {} {}", c.name, yes(c.pass), c.detail));
            }
            if !out.all_pass() {
                code = EXIT_VIOLATION;
            }
            out.trace
        }
        Stage::Full => match full_construction_with_limit(t, d, k, max_cells)? {
            FullOutcome::Failed(f) => {
                put_failure(&mut r, &f);
                r.print();
                return Ok(EXIT_VIOLATION);
            }
            FullOutcome::Complete(run) => {
                r.put("status", "complete").put("half_width", run.half_width);
                if !(run.report.all_valid && run.report.reaches_reversal) {
                    code = EXIT_VIOLATION;
                }
                run.trace
            }
        },
    };
    let init = trace.initial();
    r.put("domain", format!("[{},{}]", init.lo(), init.hi())).put("cells", init.len());
    emit_checked(output, &trace, &mut r)?;
    r.put("wall_ms", started.elapsed().as_millis());
    if output.is_some() {
        r.print();
    } else {
        // the trace went to stdout; keep the summary out of it
        for (k, v) in &r.rows {
            eprintln!("{k}{}{v}", if machine { "=" } else { ": " });
        }
    }
    Ok(code)
}

fn cmd_verify(machine: bool, path: &Path, strict: bool) -> Outcome {
    let (rep, t) = verify_path(path)?;
    let mut r = Report::new(machine);
    put_verification(&mut r, &rep);
    let mut ok = rep.allowable;
    if strict {
        let clear = rep.all_valid && rep.clears_window(t);
        r.put("strict", yes(clear));
        ok &= clear;
    }
    r.print();
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_search(machine: bool, n: usize, mode: Mode, allow_large: bool, output: Option<&Path>) -> Outcome {
    let limit = if allow_large { usize::MAX } else { DEFAULT_SEARCH_LIMIT };
    let mode = match mode {
        Mode::Single => SearchMode::SingleFlip,
        Mode::Multi => SearchMode::MultiFlip,
    };
    let res = search_best_deviation(n, mode, limit)?;
    let mut r = Report::new(machine);
    r.put("n", n).put("best", res.best_min_deviation).put("states", res.states_explored);
    r.print();
    let text = res.to_text()?;
    match output {
        Some(p) => write_text(p, &text)?,
        None => stdout(&text),
    }
    Ok(EXIT_OK)
}

fn load_points(path: &Path) -> std::result::Result<PointSet, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    Ok(PointSet::new(parse_points(&text)?)?)
}

fn cmd_points(machine: bool, path: &Path, action: PointAction) -> Outcome {
    let ps = load_points(path)?;
    let mut r = Report::new(machine);
    r.put("points", ps.len());
    let code = match action {
        PointAction::Sequence => {
            let hp = circular_sequence(&ps)?;
            let tr = hp.trace();
            let rep = verify_trace(&tr);
            r.put("start_direction", "(1,+0)");
            r.put("initial", hp.initial.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "));
            for (i, e) in hp.events.iter().enumerate() {
                let parts: Vec<String> = e
                    .flips
                    .iter()
                    .zip(&e.lines)
                    .map(|(f, l)| {
                        let labels: Vec<String> = l.iter().map(|x| x.to_string()).collect();
                        format!("{f} line {}", labels.join(","))
                    })
                    .collect();
                r.put(&format!("event_{}", i + 1), parts.join("; "));
            }
            put_verification(&mut r, &rep);
            if rep.allowable && rep.reaches_reversal {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        PointAction::Imbalance => {
            let (recs, min) = line_imbalances(&ps)?;
            for rec in &recs {
                let labels: Vec<String> = rec.labels.iter().map(|x| x.to_string()).collect();
                r.put(
                    &format!("line_{}", labels.join("_")),
                    format!("left {} right {} imbalance {}", rec.left, rec.right, rec.imbalance()),
                );
            }
            r.put("minimum", min);
            EXIT_OK
        }
        PointAction::Link => {
            let holds = deviation_imbalance_link(&ps)?;
            let (_, min) = line_imbalances(&ps)?;
            let rep = verify_trace(&circular_sequence(&ps)?.trace());
            r.put("link", if holds { "holds" } else { "fails" }).put("min_imbalance", min);
            if let Some(d) = rep.min_deviation {
                r.put("min_deviation", d);
            }
            if holds {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
    };
    r.print();
    Ok(code)
}

fn cmd_render(path: &Path, lines: bool, output: Option<&Path>) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    let svg = if text.starts_with(MAGIC) {
        let tr = read_trace(text.as_bytes())?;
        tr.replay()?;
        render_trace_svg(&tr)
    } else {
        render_points_svg(&PointSet::new(parse_points(&text)?)?, lines)?
    };
    match output {
        Some(p) => write_text(p, &svg)?,
        None => stdout(&svg),
    }
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Outcome {
    let m = cli.machine;
    match cli.cmd {
        Cmd::Construct { stage, t, d, k, n, b_len, x_len, plan, max_cells, unchecked, output } => {
            cmd_construct(m, stage, t, d, k, n, b_len, x_len, plan, max_cells, unchecked, output.as_deref())
        }
        Cmd::Verify { path, strict } => cmd_verify(m, &path, strict),
        Cmd::Search { n, mode, allow_large, output } => cmd_search(m, n, mode, allow_large, output.as_deref()),
        Cmd::Points { path, action } => cmd_points(m, &path, action),
        Cmd::Render { path, lines, output } => cmd_render(&path, lines, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let machine = cli.machine;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if machine {
                stdout(&format!("error={}\nexit={}\n", f.msg, f.code));
            }
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
