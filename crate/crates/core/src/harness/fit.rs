//! Least-squares fit of routing accuracy against hub size.
//!
//! Model: `acc(N) = c + (a - c) · exp(-λ (N - n0))` with `0 ≤ c ≤ a ≤ 1`
//! and `λ ≥ 0`. For fixed λ the model is linear in `(a, c)`, so the fit
//! profiles out `(a, c)` with an exact box-constrained linear solve and
//! searches λ alone: a coarse log-spaced grid, then golden-section
//! refinement around the best grid point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_N0: f64 = 5.0;
const LAMBDA_MAX: f64 = 10.0;
const GRID_POINTS: usize = 400;
const GOLDEN_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 distinct N values, got {0}")]
    DegenerateInput(usize),
    #[error("non-finite point ({0}, {1})")]
    NonFinite(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub c: f64,
    pub lambda: f64,
    pub n0: f64,
    pub rss: f64,
}

impl DecayFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.c + (self.a - self.c) * (-self.lambda * (n - self.n0)).exp()
    }
}

struct Profile {
    a: f64,
    c: f64,
    rss: f64,
}

fn rss_of(points: &[(f64, f64)], decay: &[f64], a: f64, c: f64) -> f64 {
    points
        .iter()
        .zip(decay)
        .map(|((_, y), e)| {
            let r = c + (a - c) * e - y;
            r * r
        })
        .sum()
}

/// Minimises `Σ (y - (p + t·q))²` over `t ∈ [0, 1]` for a segment
/// `(a, c) = base + t·dir`, returning the clamped `t`.
fn best_on_segment(points: &[(f64, f64)], decay: &[f64], base: (f64, f64), dir: (f64, f64)) -> f64 {
    // model_i(t) = m0_i + t·m1_i
    let mut num = 0.0;
    let mut den = 0.0;
    for ((_, y), e) in points.iter().zip(decay) {
        let m0 = base.1 + (base.0 - base.1) * e;
        let m1 = dir.1 + (dir.0 - dir.1) * e;
        num += m1 * (y - m0);
        den += m1 * m1;
    }
    if den <= 0.0 {
        0.0
    } else {
        (num / den).clamp(0.0, 1.0)
    }
}

/// Exact minimiser of the RSS over the triangle `0 ≤ c ≤ a ≤ 1` for fixed λ.
fn profile(points: &[(f64, f64)], n0: f64, lambda: f64) -> Profile {
    let decay: Vec<f64> = points.iter().map(|(n, _)| (-lambda * (n - n0)).exp()).collect();
    let mut best = Profile {
        a: 0.0,
        c: 0.0,
        rss: f64::INFINITY,
    };
    let mut consider = |a: f64, c: f64| {
        let rss = rss_of(points, &decay, a, c);
        if rss < best.rss {
            best = Profile { a, c, rss };
        }
    };

    // Interior: normal equations of y ≈ a·e + c·(1 - e).
    let (mut ee, mut ef, mut ff, mut ye, mut yf) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((_, y), e) in points.iter().zip(&decay) {
        let f = 1.0 - e;
        ee += e * e;
        ef += e * f;
        ff += f * f;
        ye += y * e;
        yf += y * f;
    }
    let det = ee * ff - ef * ef;
    if det.abs() > 1e-14 * (ee * ff).max(f64::MIN_POSITIVE) {
        let a = (ye * ff - yf * ef) / det;
        let c = (yf * ee - ye * ef) / det;
        if 0.0 <= c && c <= a && a <= 1.0 {
            consider(a, c);
        }
    }

    // Edges of the triangle: c = 0, a = 1, c = a.
    let t = best_on_segment(points, &decay, (0.0, 0.0), (1.0, 0.0));
    consider(t, 0.0);
    let t = best_on_segment(points, &decay, (1.0, 0.0), (0.0, 1.0));
    consider(1.0, t);
    let t = best_on_segment(points, &decay, (0.0, 0.0), (1.0, 1.0));
    consider(t, t);
    best
}

/// Fits the decay curve with the reference count `n0 = 5`.
pub fn fit_decay_curve(points: &[(f64, f64)]) -> Result<DecayFit, FitError> {
    fit_decay_curve_with_n0(points, DEFAULT_N0)
}

pub fn fit_decay_curve_with_n0(points: &[(f64, f64)], n0: f64) -> Result<DecayFit, FitError> {
    if let Some(&(n, y)) = points.iter().find(|(n, y)| !n.is_finite() || !y.is_finite()) {
        return Err(FitError::NonFinite(n, y));
    }
    let mut distinct: Vec<f64> = points.iter().map(|(n, _)| *n).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FitError::DegenerateInput(distinct.len()));
    }

    // λ = 0 plus a log-spaced grid over [1e-5, LAMBDA_MAX].
    let mut grid = vec![0.0];
    let (lo, hi) = (1e-5_f64.ln(), LAMBDA_MAX.ln());
    grid.extend((0..GRID_POINTS).map(|i| (lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).exp()));

    let scores: Vec<f64> = grid.iter().map(|&l| profile(points, n0, l).rss).collect();
    let best_idx = (0..grid.len())
        .min_by(|&i, &j| scores[i].total_cmp(&scores[j]))
        .expect("grid is non-empty");

    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let mut f1 = profile(points, n0, x1).rss;
    let mut f2 = profile(points, n0, x2).rss;
    while hi - lo > GOLDEN_TOL * (1.0 + lo.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = profile(points, n0, x1).rss;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = profile(points, n0, x2).rss;
        }
    }

    // Keep whichever of the refined point and the grid point is better.
    let refined = 0.5 * (lo + hi);
    let (lambda, fit) = {
        let r = profile(points, n0, refined);
        if r.rss <= scores[best_idx] {
            (refined, r)
        } else {
            (grid[best_idx], profile(points, n0, grid[best_idx]))
        }
    };
    Ok(DecayFit {
        a: fit.a,
        c: fit.c,
        lambda,
        n0,
        rss: fit.rss,
    })
}

/// RSS of the best constant in `[0, 1]`.
pub fn constant_fit_rss(points: &[(f64, f64)]) -> f64 {
    let mean = points.iter().map(|(_, y)| y).sum::<f64>() / points.len() as f64;
    let level = mean.clamp(0.0, 1.0);
    points.iter().map(|(_, y)| (y - level).powi(2)).sum()
}
