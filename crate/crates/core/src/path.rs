//! Path records: piecewise-constant block-count paths and piecewise-linear
//! paths with jumps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEvent {
    pub time: f64,
    pub block_count: usize,
    /// Number of blocks that merged; `None` for the initial record.
    pub merger_size: Option<usize>,
}

/// Right-continuous block-count path. `events[0]` is `(0, n, None)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPath {
    pub n: usize,
    pub events: Vec<BlockEvent>,
}

impl BlockPath {
    pub fn new(n: usize) -> Self {
        Self::starting_at(n, 0.0)
    }

    pub fn starting_at(n: usize, t0: f64) -> Self {
        BlockPath {
            n,
            events: vec![BlockEvent {
                time: t0,
                block_count: n,
                merger_size: None,
            }],
        }
    }

    pub fn current(&self) -> usize {
        self.events.last().map_or(self.n, |e| e.block_count)
    }

    pub fn last_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    /// Records a merger of `k` blocks at `time`.
    pub fn record(&mut self, time: f64, k: usize) -> Result<()> {
        let prev = self.last_time();
        if time <= prev {
            return Err(Error::NonMonotoneTime { prev, next: time });
        }
        let b = self.current();
        if k < 2 || k > b {
            return domain(format!("merger of {k} blocks with {b} present"));
        }
        self.events.push(BlockEvent {
            time,
            block_count: b - k + 1,
            merger_size: Some(k),
        });
        Ok(())
    }

    pub fn is_absorbed(&self) -> bool {
        self.current() == 1
    }

    /// Block count at `t` (right-continuous). Before the first record the
    /// count is `n`.
    pub fn count_at(&self, t: f64) -> usize {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            self.n
        } else {
            self.events[idx - 1].block_count
        }
    }

    /// Time of the final merger, measured from the start of the path.
    pub fn time_to_mrca(&self) -> Result<f64> {
        if !self.is_absorbed() {
            return Err(Error::NotAbsorbed(self.current()));
        }
        Ok(self.last_time() - self.events[0].time)
    }

    /// `∫ N(t) 1{N(t) > 1} dt`.
    pub fn total_branch_length(&self) -> Result<f64> {
        if !self.is_absorbed() {
            return Err(Error::NotAbsorbed(self.current()));
        }
        Ok(self
            .events
            .windows(2)
            .map(|w| w[0].block_count as f64 * (w[1].time - w[0].time))
            .sum())
    }

    /// First merger size, if any merger happened.
    pub fn first_merger(&self) -> Option<usize> {
        self.events.get(1).and_then(|e| e.merger_size)
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let first = self.events.first().ok_or_else(|| Error::Domain("empty path".into()))?;
        if first.block_count != self.n || first.merger_size.is_some() {
            return domain("path must start with n blocks and no merger");
        }
        for w in self.events.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::NonMonotoneTime {
                    prev: w[0].time,
                    next: w[1].time,
                });
            }
            match w[1].merger_size {
                Some(k) if k >= 2 && w[0].block_count == w[1].block_count + k - 1 => {}
                _ => return domain(format!("inconsistent merger at t = {}", w[1].time)),
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,block_count,merger_size")?;
        for e in &self.events {
            match e.merger_size {
                Some(k) => writeln!(w, "{:?},{},{}", e.time, e.block_count, k)?,
                None => writeln!(w, "{:?},{},", e.time, e.block_count)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub time: f64,
    pub value: f64,
    /// True when this knot carries the post-jump value; the knot before it
    /// holds the left limit at the same time.
    pub is_jump: bool,
}

/// Piecewise-linear path with jumps, right-continuous.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePath {
    pub knots: Vec<Knot>,
}

impl PiecewisePath {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn start(time: f64, value: f64) -> Self {
        PiecewisePath {
            knots: vec![Knot {
                time,
                value,
                is_jump: false,
            }],
        }
    }

    /// Adds a continuity point. Time must not go backwards.
    pub fn push(&mut self, time: f64, value: f64) {
        debug_assert!(self.knots.last().is_none_or(|k| k.time <= time));
        self.knots.push(Knot {
            time,
            value,
            is_jump: false,
        });
    }

    /// Adds a jump at `time` from left limit `before` to `after`.
    pub fn jump(&mut self, time: f64, before: f64, after: f64) {
        let dup = self
            .knots
            .last()
            .is_some_and(|k| k.time == time && k.value == before && !k.is_jump);
        if !dup {
            self.push(time, before);
        }
        self.knots.push(Knot {
            time,
            value: after,
            is_jump: true,
        });
    }

    pub fn t_start(&self) -> f64 {
        self.knots.first().map_or(0.0, |k| k.time)
    }

    pub fn t_end(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.time)
    }

    pub fn end_value(&self) -> f64 {
        self.knots.last().map_or(f64::NAN, |k| k.value)
    }

    /// Right-continuous value at `t`, clamped to the end points.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|k| k.time <= t);
        if idx == 0 {
            return self.knots.first().map_or(f64::NAN, |k| k.value);
        }
        let a = &self.knots[idx - 1];
        match self.knots.get(idx) {
            Some(b) if b.time > a.time => a.value + (b.value - a.value) * (t - a.time) / (b.time - a.time),
            _ => a.value,
        }
    }

    /// Left limit at `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|k| k.time < t);
        if idx == 0 {
            return self.knots.first().map_or(f64::NAN, |k| k.value);
        }
        let a = &self.knots[idx - 1];
        match self.knots.get(idx) {
            Some(b) if b.time > a.time => a.value + (b.value - a.value) * (t - a.time) / (b.time - a.time),
            _ => a.value,
        }
    }

    /// `(time, left limit, post-jump value)` for each jump.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .filter(|w| w[1].is_jump)
            .map(|w| (w[1].time, w[0].value, w[1].value))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,value,is_jump")?;
        for k in &self.knots {
            writeln!(w, "{:?},{:?},{}", k.time, k.value, u8::from(k.is_jump))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_path() -> BlockPath {
        let mut p = BlockPath::new(3);
        p.record(0.5, 2).unwrap();
        p.record(1.2, 2).unwrap();
        p
    }

    #[test]
    fn branch_length_arithmetic() {
        let p = sample_path();
        assert_abs_diff_eq!(p.total_branch_length().unwrap(), 2.9, epsilon = 1e-15);
        assert_eq!(p.time_to_mrca().unwrap(), 1.2);
        assert_eq!(p.count_at(0.5), 2);
        assert_eq!(p.count_at(0.4999), 3);
        p.validate().unwrap();
    }

    #[test]
    fn unabsorbed_is_an_error() {
        let mut p = BlockPath::new(4);
        p.record(0.1, 2).unwrap();
        assert!(matches!(p.time_to_mrca(), Err(Error::NotAbsorbed(3))));
        assert!(p.total_branch_length().is_err());
    }

    #[test]
    fn ties_fail_loudly() {
        let mut p = BlockPath::new(4);
        p.record(0.1, 2).unwrap();
        assert!(matches!(p.record(0.1, 2), Err(Error::NonMonotoneTime { .. })));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample_path().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "time,block_count,merger_size\n0.0,3,\n0.5,2,2\n1.2,1,2\n");
    }

    #[test]
    fn piecewise_evaluation() {
        let mut p = PiecewisePath::start(0.0, 1.0);
        p.push(1.0, 0.0);
        p.jump(1.0, 0.0, 2.0);
        p.push(3.0, 0.0);
        assert_eq!(p.value_at(0.5), 0.5);
        assert_eq!(p.value_at(1.0), 2.0);
        assert_eq!(p.left_limit(1.0), 0.0);
        assert_eq!(p.value_at(2.0), 1.0);
        assert_eq!(p.jumps().collect::<Vec<_>>(), vec![(1.0, 0.0, 2.0)]);
        assert_eq!(p.knots.len(), 4);
    }
}
