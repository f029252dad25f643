//! Affine rescalings that centre the finite-`n` genealogy statistics.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::path::{BlockPath, PiecewisePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RescaleKind {
    Mrca,
    Blocks,
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleSpec {
    pub kind: RescaleKind,
    pub n: usize,
}

/// `(log n, log log n)`, requiring `n >= 3` so both are defined.
fn logs(n: usize) -> Result<(f64, f64)> {
    if n < 3 {
        return domain(format!("rescaling needs n >= 3, got {n}"));
    }
    let ln = (n as f64).ln();
    Ok((ln, ln.ln()))
}

impl RescaleSpec {
    pub fn new(kind: RescaleKind, n: usize) -> Result<Self> {
        logs(n)?;
        Ok(RescaleSpec { kind, n })
    }

    /// Rescaled scalar. For `Blocks`, `t` is the rescaled time and `raw` the
    /// block count at model time `t / log n`; it is ignored otherwise.
    pub fn apply(&self, raw: f64, t: f64) -> Result<f64> {
        match self.kind {
            RescaleKind::Mrca => mrca(self.n, raw),
            RescaleKind::Length => length(self.n, raw),
            RescaleKind::Blocks => blocks(self.n, t, raw),
        }
    }

    pub fn invert(&self, value: f64, t: f64) -> Result<f64> {
        match self.kind {
            RescaleKind::Mrca => mrca_inverse(self.n, value),
            RescaleKind::Length => length_inverse(self.n, value),
            RescaleKind::Blocks => blocks_inverse(self.n, t, value),
        }
    }
}

/// `a - log log n`.
pub fn mrca(n: usize, a: f64) -> Result<f64> {
    let (_, lln) = logs(n)?;
    Ok(a - lln)
}

pub fn mrca_inverse(n: usize, x: f64) -> Result<f64> {
    let (_, lln) = logs(n)?;
    Ok(x + lln)
}

fn length_centre(n: f64, ln: f64, lln: f64) -> f64 {
    n / ln + n * lln / (ln * ln)
}

/// `((log n)^2 / n)(l - n/log n - n log log n/(log n)^2)`.
pub fn length(n: usize, l: f64) -> Result<f64> {
    let (ln, lln) = logs(n)?;
    let nf = n as f64;
    Ok(ln * ln / nf * (l - length_centre(nf, ln, lln)))
}

pub fn length_inverse(n: usize, x: f64) -> Result<f64> {
    let (ln, lln) = logs(n)?;
    let nf = n as f64;
    Ok(x * nf / (ln * ln) + length_centre(nf, ln, lln))
}

fn blocks_centre(n: f64, ln: f64, lln: f64, t: f64) -> f64 {
    let e = (-t).exp();
    n * e + n * t * e * lln / ln
}

/// `(log n / n)(N - n e^{-t} - n t e^{-t} log log n / log n)`.
pub fn blocks(n: usize, t: f64, count: f64) -> Result<f64> {
    let (ln, lln) = logs(n)?;
    let nf = n as f64;
    Ok(ln / nf * (count - blocks_centre(nf, ln, lln, t)))
}

pub fn blocks_inverse(n: usize, t: f64, x: f64) -> Result<f64> {
    let (ln, lln) = logs(n)?;
    let nf = n as f64;
    Ok(x * nf / ln + blocks_centre(nf, ln, lln, t))
}

/// `X_n` on `[0, horizon]`: the grid plus both sides of every block-count
/// drop, with model lags mapped to rescaled time `lag · log n`.
pub fn blocks_path(path: &BlockPath, grid: &[f64], horizon: f64) -> Result<PiecewisePath> {
    let n = path.n;
    let (ln, _) = logs(n)?;
    // (time, count before, count after)
    let mut nodes: Vec<(f64, usize, usize)> = grid
        .iter()
        .filter(|&&t| t <= horizon)
        .map(|&t| {
            let c = path.count_at(t / ln);
            (t, c, c)
        })
        .collect();
    for w in path.events.windows(2) {
        let t = w[1].time * ln;
        if t <= horizon {
            nodes.push((t, w[0].block_count, w[1].block_count));
        }
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out = PiecewisePath::new();
    for (t, before, after) in nodes {
        if out.knots.last().is_some_and(|k| k.time == t) && before == after {
            continue;
        }
        let x = blocks(n, t, after as f64)?;
        if before != after {
            out.jump(t, blocks(n, t, before as f64)?, x);
        } else {
            out.push(t, x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centres_map_to_zero() {
        let n = 1000;
        let lln = (n as f64).ln().ln();
        assert_eq!(mrca(n, lln).unwrap(), 0.0);
        assert!(blocks(n, 0.0, n as f64).unwrap().abs() < 1e-12);
        let l = length_inverse(n, 0.0).unwrap();
        assert!(length(n, l).unwrap().abs() < 1e-12);
    }

    #[test]
    fn too_small() {
        assert!(mrca(2, 1.0).is_err());
        assert!(RescaleSpec::new(RescaleKind::Blocks, 1).is_err());
    }
}
