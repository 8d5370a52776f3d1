//! Constrained least-squares fit of `F(m) = A p^m + B`.

use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};

const GRID: usize = 2000;
const CONST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub p: f64,
    pub r: f64,
    pub stderr_p: f64,
    pub n_points: usize,
}

impl DecayFit {
    pub fn predict(&self, m: f64) -> f64 {
        self.a * self.p.powf(m) + self.b
    }
}

/// Average gate error `(d−1)(1−p)/d`.
pub fn rb_number(p: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QcvvError::validation(format!(
            "decay parameter {p} outside [0, 1]"
        )));
    }
    if d < 2 {
        return Err(QcvvError::validation(format!(
            "dimension must be ≥ 2, got {d}"
        )));
    }
    let d = d as f64;
    Ok((d - 1.0) * (1.0 - p) / d)
}

/// Unweighted fit over `(m, F)` points.
pub fn fit_decay(points: &[(f64, f64)], d: usize) -> Result<DecayFit> {
    fit_decay_weighted(points, None, d)
}

/// Fit with optional per-point weights (e.g. inverse binomial variances).
pub fn fit_decay_weighted(
    points: &[(f64, f64)],
    weights: Option<&[f64]>,
    d: usize,
) -> Result<DecayFit> {
    if d < 2 {
        return Err(QcvvError::validation(format!(
            "dimension must be ≥ 2, got {d}"
        )));
    }
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(QcvvError::DimensionMismatch {
                what: "fit weights",
                expected: points.len(),
                found: w.len(),
            });
        }
        if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(QcvvError::validation(
                "fit weights must be positive and finite",
            ));
        }
    }
    if points
        .iter()
        .any(|&(m, f)| !(m.is_finite() && m >= 0.0 && f.is_finite()))
    {
        return Err(QcvvError::validation("points must have finite F and m ≥ 0"));
    }
    let mut lengths: Vec<f64> = points.iter().map(|p| p.0).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(QcvvError::InsufficientData(format!(
            "decay fit needs at least 3 distinct lengths, got {}",
            lengths.len()
        )));
    }

    let n_points = points.len();
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    if hi - lo <= 2.0 * CONST_TOL {
        let c = (0.5 * (lo + hi)).clamp(0.0, 1.0);
        return Ok(DecayFit {
            a: 0.0,
            b: c,
            p: 1.0,
            r: 0.0,
            stderr_p: 0.0,
            n_points,
        });
    }

    let unit = vec![1.0; n_points];
    let problem = Problem {
        m: points.iter().map(|p| p.0).collect(),
        y: points.iter().map(|p| p.1).collect(),
        w: weights.map_or(unit, <[f64]>::to_vec),
    };

    let mut best = (0, f64::INFINITY);
    for j in 0..=GRID {
        let r = problem.profile(j as f64 / GRID as f64).2;
        if r < best.1 {
            best = (j, r);
        }
    }
    let step = 1.0 / GRID as f64;
    let lo = (best.0 as f64 - 1.0).max(0.0) * step;
    let hi = ((best.0 as f64 + 1.0) * step).min(1.0);
    let mut p = golden_section(|p| problem.profile(p).2, lo, hi);
    if problem.profile(p).2 > best.1 {
        p = best.0 as f64 * step;
    }
    let (a, b, rss) = problem.profile(p);

    let dof = n_points.saturating_sub(3).max(1) as f64;
    let sigma2 = rss / dof;
    let stderr_p = if sigma2 == 0.0 {
        0.0
    } else {
        let curv = problem.curvature(p);
        if curv > 0.0 {
            (2.0 * sigma2 / curv).sqrt().min(1.0)
        } else {
            1.0
        }
    };

    Ok(DecayFit {
        a,
        b,
        p,
        r: rb_number(p, d)?,
        stderr_p,
        n_points,
    })
}

struct Problem {
    m: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Problem {
    fn rss(&self, x: &[f64], a: f64, b: f64) -> f64 {
        x.iter()
            .zip(&self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| {
                let e = a * x + b - y;
                w * e * e
            })
            .sum()
    }

    /// Best `(A, B)` for fixed p over the triangle A, B ≥ 0, A + B ≤ 1,
    /// together with the residual sum of squares.
    fn profile(&self, p: f64) -> (f64, f64, f64) {
        let x: Vec<f64> = self.m.iter().map(|&m| p.powf(m)).collect();
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&xi, &yi), &wi) in x.iter().zip(&self.y).zip(&self.w) {
            sw += wi;
            sx += wi * xi;
            sy += wi * yi;
            sxx += wi * xi * xi;
            sxy += wi * xi * yi;
        }
        let mut candidates = Vec::with_capacity(4);
        let det = sw * sxx - sx * sx;
        if det > 1e-14 * sw * sxx.max(f64::MIN_POSITIVE) {
            let a = (sw * sxy - sx * sy) / det;
            let b = (sxx * sy - sx * sxy) / det;
            if a >= 0.0 && b >= 0.0 && a + b <= 1.0 {
                candidates.push((a, b));
            }
        }
        if candidates.is_empty() {
            // A = 0
            candidates.push((0.0, (sy / sw).clamp(0.0, 1.0)));
            // B = 0
            let a = if sxx > 0.0 {
                (sxy / sxx).clamp(0.0, 1.0)
            } else {
                0.0
            };
            candidates.push((a, 0.0));
            // A + B = 1: model 1 + A(x − 1)
            let (mut num, mut den) = (0.0, 0.0);
            for ((&xi, &yi), &wi) in x.iter().zip(&self.y).zip(&self.w) {
                num += wi * (xi - 1.0) * (yi - 1.0);
                den += wi * (xi - 1.0) * (xi - 1.0);
            }
            let a = if den > 0.0 {
                (num / den).clamp(0.0, 1.0)
            } else {
                0.0
            };
            candidates.push((a, 1.0 - a));
        }
        candidates
            .into_iter()
            .map(|(a, b)| (a, b, self.rss(&x, a, b)))
            .min_by(|u, v| u.2.total_cmp(&v.2))
            .expect("at least one candidate")
    }

    /// Second derivative of the profiled residual at p.
    fn curvature(&self, p: f64) -> f64 {
        let h = 1e-4;
        let f = |q: f64| self.profile(q).2;
        if p - h < 0.0 {
            (f(p) - 2.0 * f(p + h) + f(p + 2.0 * h)) / (h * h)
        } else if p + h > 1.0 {
            (f(p) - 2.0 * f(p - h) + f(p - 2.0 * h)) / (h * h)
        } else {
            (f(p + h) - 2.0 * f(p) + f(p - h)) / (h * h)
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}
