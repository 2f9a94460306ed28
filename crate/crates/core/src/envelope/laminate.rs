//! First-order laminates `a·g(λ·y)` with `a ∈ ker 𝔸(x0, λ)`.
//!
//! Directions are the primitive integer vectors in `{-1,0,1}^N` and volume
//! fractions are even multiples of `1/G`, so every candidate is exactly
//! representable on the grid with no Nyquist content and the bound it reports
//! is attained by a grid field.

use nalgebra::DVector;

use super::EnvelopeQuery;
use crate::error::Result;
use crate::linalg::projector_range_basis;
use crate::torus::{PeriodicField, TorusGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct LaminateSeed {
    pub direction: Vec<i64>,
    /// Unit kernel vector.
    pub amplitude_dir: Vec<f64>,
    pub theta: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct LaminateBound {
    /// `min(f(ξ), best laminate value)`.
    pub value: f64,
    pub best: Option<LaminateSeed>,
    /// Best candidate for every (direction, kernel vector) pair.
    pub candidates: Vec<LaminateSeed>,
}

/// Primitive vectors of `{-1,0,1}^N` whose first nonzero entry is positive.
pub fn lattice_directions(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut rem = code;
        let v: Vec<i64> = (0..n)
            .map(|_| {
                let d = (rem % 3) as i64 - 1;
                rem /= 3;
                d
            })
            .collect();
        if v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(v);
        }
    }
    // axes first, then by number of nonzero entries
    out.sort_by_key(|v| (v.iter().filter(|&&c| c != 0).count(), v.iter().map(|c| -c).collect::<Vec<_>>()));
    out
}

fn two_phase_energy(query: &EnvelopeQuery, a: &[f64], theta: f64, t: f64, buf: &mut [f64]) -> f64 {
    let xi = &query.xi;
    for (b, (x, ai)) in buf.iter_mut().zip(xi.iter().zip(a)) {
        *b = x + (1.0 - theta) * t * ai;
    }
    let plus = query.density_at(buf);
    for (b, (x, ai)) in buf.iter_mut().zip(xi.iter().zip(a)) {
        *b = x - theta * t * ai;
    }
    let minus = query.density_at(buf);
    theta * plus + (1.0 - theta) * minus
}

fn golden_section(mut lo: f64, mut hi: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

/// Minimum over lattice directions, kernel basis vectors, fractions `θ ∈ {2j/G}` and
/// amplitudes `t` (a grid on `[-T, T]` refined by golden section) of
/// `θ f(ξ + (1-θ)t a) + (1-θ) f(ξ - θ t a)`.
pub fn laminate_upper_bound(query: &EnvelopeQuery, grid_size: usize) -> Result<LaminateBound> {
    let opts = &query.options;
    let n = query.frozen.dims().space;
    let f0 = query.density_at(&query.xi);
    let span = opts.laminate_amplitude;
    let count = opts.laminate_points.max(3) | 1;
    let ts: Vec<f64> = (0..count)
        .map(|i| -span + 2.0 * span * i as f64 / (count - 1) as f64)
        .collect();
    let dt = 2.0 * span / (count - 1) as f64;
    let thetas: Vec<f64> = (1..grid_size / 2).map(|j| 2.0 * j as f64 / grid_size as f64).collect();
    let mut buf = vec![0.0; query.xi.len()];
    let mut candidates = Vec::new();
    for dir in lattice_directions(n) {
        let lambda: Vec<f64> = dir.iter().map(|&c| c as f64).collect();
        let p = query.frozen.projector(&lambda)?;
        for a in projector_range_basis(&p) {
            let a: Vec<f64> = a.iter().copied().collect();
            let mut best: Option<LaminateSeed> = None;
            for &theta in &thetas {
                let (mut t_best, mut v_best) = (0.0, f64::INFINITY);
                for &t in &ts {
                    let v = two_phase_energy(query, &a, theta, t, &mut buf);
                    if v < v_best {
                        t_best = t;
                        v_best = v;
                    }
                }
                let (t_ref, v_ref) = golden_section(t_best - dt, t_best + dt, &mut |t| {
                    two_phase_energy(query, &a, theta, t, &mut buf)
                });
                let (t, v) = if v_ref < v_best { (t_ref, v_ref) } else { (t_best, v_best) };
                if best.as_ref().is_none_or(|b| v < b.value) {
                    best = Some(LaminateSeed {
                        direction: dir.clone(),
                        amplitude_dir: a.clone(),
                        theta,
                        t,
                        value: v,
                    });
                }
            }
            candidates.extend(best);
        }
    }
    let best = candidates
        .iter()
        .filter(|c| c.value.is_finite())
        .min_by(|x, y| x.value.total_cmp(&y.value))
        .cloned();
    let value = best.as_ref().map_or(f0, |b| b.value.min(f0));
    Ok(LaminateBound {
        value,
        best,
        candidates,
    })
}

/// Grid field of a laminate: nodes with phase `(λ·i) mod G < θG` take `(1-θ)t a`,
/// the rest `-θ t a`.
pub fn seed_field(grid: &TorusGrid, seed: &LaminateSeed) -> PeriodicField {
    let g = grid.size() as i64;
    let cut = (seed.theta * grid.size() as f64).round() as i64;
    let a = DVector::from_column_slice(&seed.amplitude_dir);
    let hi = &a * ((1.0 - seed.theta) * seed.t);
    let lo = &a * (-seed.theta * seed.t);
    let mut field = PeriodicField::zeros(grid, a.len());
    for idx in 0..grid.len() {
        let phase = grid
            .multi_index(idx)
            .iter()
            .zip(&seed.direction)
            .map(|(&i, &k)| i as i64 * k)
            .sum::<i64>()
            .rem_euclid(g);
        let v = if phase < cut { &hi } else { &lo };
        field.at_mut(idx).copy_from_slice(v.as_slice());
    }
    field
}
