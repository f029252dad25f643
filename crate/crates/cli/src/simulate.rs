use std::fmt;
use std::time::Instant;

use serde_json::{json, Value};

use bs_coalescent::coalescent::{simulate_coalescent, Mode};
use bs_coalescent::path::PiecewisePath;
use bs_coalescent::pdmp::{simulate_a, simulate_r, Init};
use bs_coalescent::population::{extend_backward, genealogy_at, initial_lookback, simulate_population, GenealogyFrame};
use bs_coalescent::recursive_tree::{build_rrt, cutting_path, depth_sum, EvolvingTreeState};
use bs_coalescent::rng::{replicate, SimRng};
use bs_coalescent::stable::{length_path, simulate_stable, StablePathTruncated, TwoParameterStable, DEFAULT_TAIL};
use bs_coalescent::{Error, Result as CoreResult};

use crate::args::{Format, Kind, RunConfig, SimulateArgs};
use crate::output::OutDir;
use crate::Failure;

/// Frames of the population genealogy per simulated window.
const POPULATION_FRAMES: usize = 10;

#[derive(Debug, Clone, Copy)]
enum Cell {
    Count(u64),
    Real(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Count(k) => write!(f, "{k}"),
            Cell::Real(x) => write!(f, "{x:?}"),
        }
    }
}

impl From<&Cell> for Value {
    fn from(c: &Cell) -> Value {
        match *c {
            Cell::Count(k) => json!(k),
            Cell::Real(x) => json!(x),
        }
    }
}

/// One replicate: summary cells (the first is the event count), named CSV
/// artifacts, and the JSON form of the same data.
struct Replicate {
    cells: Vec<Cell>,
    csv: Vec<(&'static str, Vec<u8>)>,
    json: Vec<(&'static str, Value)>,
}

fn columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Coalescent => &["mergers", "time_to_mrca", "total_branch_length"],
        Kind::Rrt => &["r_jumps", "depth_sum", "cutting_mergers", "r_end"],
        Kind::Population => &["events", "mrca_age", "branch_length"],
        Kind::R | Kind::A => &["jumps", "end_value"],
        Kind::Stable => &["jump_count", "end_value"],
        Kind::LimitLength => &["jump_count", "l_start", "l_end"],
    }
}

pub fn run(args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = RunConfig::from_args(args).map_err(Failure::config)?;
    if args.kind == Kind::Rrt && cfg.n < 3 {
        return Err(Failure::config("the evolving tree needs --n of at least 3"));
    }
    if args.kind == Kind::LimitLength && !(args.step > 0.0 && args.step <= cfg.horizon) {
        return Err(Failure::config(format!(
            "--step must lie in (0, horizon], got {}",
            args.step
        )));
    }
    let init = match args.x0 {
        Some(x) if x.is_finite() => Init::Level(x),
        Some(x) => return Err(Failure::config(format!("--x0 must be finite, got {x}"))),
        None => Init::Stationary,
    };
    let start = Instant::now();
    let kind = args.kind;
    let results = replicate(cfg.seed, cfg.replicates, |_, rng| one(kind, &cfg, init, args.step, rng));
    let reps = results.into_iter().collect::<CoreResult<Vec<_>>>()?;

    let mut out = OutDir::create(&cfg.out)?;
    let stem = kind.file_stem();
    let cols = columns(kind);
    match cfg.format {
        Format::Csv => {
            let mut summary = format!("replicate,{}\n", cols.join(","));
            for (i, r) in reps.iter().enumerate() {
                let cells: Vec<String> = r.cells.iter().map(|c| c.to_string()).collect();
                summary.push_str(&format!("{i},{}\n", cells.join(",")));
                for (suffix, bytes) in &r.csv {
                    out.write(&format!("{stem}_{i:04}_{suffix}.csv"), bytes)?;
                }
            }
            out.write(&format!("{stem}_summary.csv"), summary.as_bytes())?;
        }
        Format::Json => {
            let all: Vec<Value> = reps
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("replicate".into(), json!(i));
                    for (c, cell) in cols.iter().zip(&r.cells) {
                        obj.insert((*c).into(), cell.into());
                    }
                    for (k, v) in &r.json {
                        obj.insert((*k).into(), v.clone());
                    }
                    Value::Object(obj)
                })
                .collect();
            out.write_json(&format!("{stem}.json"), &Value::Array(all))?;
        }
    }
    let events: u64 = reps
        .iter()
        .map(|r| match r.cells[0] {
            Cell::Count(k) => k,
            Cell::Real(_) => 0,
        })
        .sum();
    println!(
        "simulate {stem}: {} replicate(s), {events} {}, {:.3}s, {} file(s) in {}",
        cfg.replicates,
        cols[0],
        start.elapsed().as_secs_f64(),
        out.files_written(),
        out.path().display()
    );
    Ok(())
}

fn csv_of(f: impl FnOnce(&mut Vec<u8>) -> CoreResult<()>) -> CoreResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn to_json<T: serde::Serialize>(v: &T) -> CoreResult<Value> {
    Ok(serde_json::to_value(v)?)
}

fn one(kind: Kind, cfg: &RunConfig, init: Init, step: f64, rng: &mut SimRng) -> CoreResult<Replicate> {
    match kind {
        Kind::Coalescent => {
            let path = simulate_coalescent(cfg.n, rng, Mode::CountsOnly)?.path;
            Ok(Replicate {
                cells: vec![
                    Cell::Count(path.events.len().saturating_sub(1) as u64),
                    Cell::Real(path.time_to_mrca()?),
                    Cell::Real(path.total_branch_length()?),
                ],
                csv: vec![("path", csv_of(|w| path.write_csv(w))?)],
                json: vec![("path", to_json(&path)?)],
            })
        }
        Kind::Rrt => {
            let tree = build_rrt(cfg.n, rng)?;
            let depths = depth_sum(&tree);
            let cut = cutting_path(tree.clone())?;
            let mut state = EvolvingTreeState::new(cfg.n, rng)?;
            let r = state.evolve(cfg.horizon, rng)?;
            let snapshot = state.snapshot();
            Ok(Replicate {
                cells: vec![
                    Cell::Count(r.jumps().count() as u64),
                    Cell::Count(depths),
                    Cell::Count(cut.events.len().saturating_sub(1) as u64),
                    Cell::Real(r.end_value()),
                ],
                csv: vec![
                    ("cutting", csv_of(|w| cut.write_csv(w))?),
                    ("r", csv_of(|w| r.write_csv(w))?),
                ],
                json: vec![
                    ("tree", to_json(&tree)?),
                    ("cutting", to_json(&cut)?),
                    ("r", to_json(&r)?),
                    ("final_tree", to_json(&snapshot)?),
                ],
            })
        }
        Kind::Population => population(cfg, rng),
        Kind::R | Kind::A => {
            let path = if kind == Kind::R {
                simulate_r(0.0, cfg.horizon, init, rng)?
            } else {
                simulate_a(0.0, cfg.horizon, init, rng)?
            };
            Ok(Replicate {
                cells: vec![Cell::Count(path.jumps().count() as u64), Cell::Real(path.end_value())],
                csv: vec![("path", csv_of(|w| path.write_csv(w))?)],
                json: vec![("path", to_json(&path)?)],
            })
        }
        Kind::Stable => {
            let s = simulate_stable(cfg.eps, cfg.horizon, rng)?;
            let path = stable_as_path(&s);
            Ok(Replicate {
                cells: vec![Cell::Count(s.jump_count() as u64), Cell::Real(s.value(cfg.horizon))],
                csv: vec![("path", csv_of(|w| path.write_csv(w))?)],
                json: vec![("drift", json!(s.drift)), ("path", to_json(&path)?)],
            })
        }
        Kind::LimitLength => {
            let tp = TwoParameterStable::simulate(cfg.eps, cfg.horizon, DEFAULT_TAIL, rng)?;
            let l = length_path(&tp, cfg.horizon, step, DEFAULT_TAIL)?;
            Ok(Replicate {
                cells: vec![
                    Cell::Count(l.jumps().count() as u64),
                    Cell::Real(l.knots.first().map_or(f64::NAN, |k| k.value)),
                    Cell::Real(l.end_value()),
                ],
                csv: vec![("path", csv_of(|w| l.write_csv(w))?)],
                json: vec![("path", to_json(&l)?)],
            })
        }
    }
}

fn stable_as_path(s: &StablePathTruncated) -> PiecewisePath {
    let mut p = PiecewisePath::start(0.0, 0.0);
    for &t in &s.times {
        p.jump(t, s.left_limit(t), s.value(t));
    }
    p.push(s.horizon, s.value(s.horizon));
    p
}

/// Event log on `[0, horizon]`, extended into the past until the genealogy
/// of every frame time has been resolved.
fn population(cfg: &RunConfig, rng: &mut SimRng) -> CoreResult<Replicate> {
    let mut lookback = initial_lookback(cfg.n);
    let mut log = simulate_population(cfg.n, (-lookback, cfg.horizon), rng)?;
    let times: Vec<f64> = (0..=POPULATION_FRAMES)
        .map(|j| cfg.horizon * j as f64 / POPULATION_FRAMES as f64)
        .collect();
    let frames = loop {
        match times
            .iter()
            .map(|&s| genealogy_at(&log, s))
            .collect::<CoreResult<Vec<_>>>()
        {
            Err(Error::LookbackExhausted { .. }) => {
                lookback *= 2.0;
                extend_backward(&mut log, -lookback, rng)?;
            }
            other => break other?,
        }
    };
    let window = log.times.iter().filter(|&&t| t >= 0.0).count();
    let frame_csv = csv_of(|w| {
        GenealogyFrame::write_csv_header(&mut *w)?;
        for f in &frames {
            f.write_csv_row(&mut *w)?;
        }
        Ok(())
    })?;
    let events: Vec<Value> = (0..log.len())
        .map(|i| {
            let victims: Vec<u32> = log.victims(i).iter().map(|v| v + 1).collect();
            json!({"time": log.times[i], "parent": log.parents[i] + 1, "victims": victims})
        })
        .collect();
    let frames_json: Vec<Value> = frames
        .iter()
        .map(|f| json!({"s": f.s, "a": f.a, "l": f.l, "trace": f.trace}))
        .collect();
    let first = frames.first().ok_or_else(|| Error::Domain("no frames".into()))?;
    Ok(Replicate {
        cells: vec![Cell::Count(window as u64), Cell::Real(first.a), Cell::Real(first.l)],
        csv: vec![("events", csv_of(|w| log.write_csv(w))?), ("frames", frame_csv)],
        json: vec![
            ("t_start", json!(log.t_start)),
            ("events", Value::Array(events)),
            ("frames", Value::Array(frames_json)),
        ],
    })
}
