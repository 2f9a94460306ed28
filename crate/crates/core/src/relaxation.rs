//! Both sides of the relaxation identity at desk scale.
//!
//! The right side is a midpoint rule for `∫ Q_{𝒜(x)} f(x, u, v) dx` over cubic tiles
//! of side `r`, with one frozen-coefficient cell problem per tile centre. The left
//! side is estimated by energies of the oscillating fields
//! `z(x) = Σ_j φ_j(x) w_j(m (x - x_j) / r)` built from the cell minimizers `w_j`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::densities::EnergyDensity;
use crate::envelope::{minimize_cell, EnvelopeQuery, EnvelopeResult, SolverOptions};
use crate::error::{Error, Result};
use crate::pseudodiff::apply_a;
use crate::pseudodiff::cutoff::smoothstep;
use crate::symbols::{CoefficientField, FrozenSymbol};
use crate::torus::{Interpolator, PeriodicField, TorusGrid};

/// Tile-centre quadrature on the unit torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub tile: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Centres `-½ + r/2 + j r` of the `(1/r)^N` tiles of side `r`; `1/r` must be an integer.
    pub fn tiles(dim: usize, r: f64) -> Result<Self> {
        let count = tiles_per_axis(r)?;
        let total = count.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let x = (0..dim)
                .map(|_| {
                    let j = rem % count;
                    rem /= count;
                    -0.5 + r / 2.0 + j as f64 * r
                })
                .collect();
            points.push(x);
        }
        Ok(Self {
            tile: r,
            weights: vec![r.powi(dim as i32); total],
            points,
        })
    }

}

fn tiles_per_axis(r: f64) -> Result<usize> {
    let inv = 1.0 / r;
    if !(r > 0.0 && r <= 1.0) || (inv - inv.round()).abs() > 1e-9 {
        return Err(Error::Config(format!("tile side r must be 1/K for an integer K, got {r}")));
    }
    Ok(inv.round() as usize)
}

/// Cutoff `φ` applied to each tile's oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CubeCutoff {
    /// Indicator of the half-open tile; the tiles partition the torus.
    Full,
    /// Tensor quintic equal to 1 except on a boundary shell of measure `mu · r^N`.
    Plateau { mu: f64 },
}

impl CubeCutoff {
    pub fn label(&self) -> String {
        match self {
            CubeCutoff::Full => "full".into(),
            CubeCutoff::Plateau { mu } => format!("plateau({mu})"),
        }
    }

    /// Width of the transition layer on each face.
    fn shell_width(&self, dim: usize, r: f64) -> f64 {
        match *self {
            CubeCutoff::Full => 0.0,
            CubeCutoff::Plateau { mu } => r * (1.0 - (1.0 - mu).powf(1.0 / dim as f64)) / 2.0,
        }
    }

    /// `φ` at offset `t = x - x0` (already wrapped to the torus).
    fn eval(&self, t: &[f64], r: f64, delta: f64) -> f64 {
        let half = r / 2.0;
        match self {
            CubeCutoff::Full => {
                if t.iter().all(|&s| -half <= s && s < half) {
                    1.0
                } else {
                    0.0
                }
            }
            CubeCutoff::Plateau { .. } => t
                .iter()
                .map(|&s| smoothstep((half - s.abs()) / delta))
                .product(),
        }
    }
}

/// Offset `x - x0` wrapped to `[-½, ½)`.
fn wrapped_offset(x: &[f64], x0: &[f64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(x0) {
        *o = (a - b + 0.5).rem_euclid(1.0) - 0.5;
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryField {
    pub field: PeriodicField,
    /// Measure of `{φ ≠ 1}` inside the tiles, counted on grid cells.
    pub shell_measure: f64,
}

/// `z(x) = Σ_j φ_j(x) w_j(m (x - x_j) / r)` on `grid`.
///
/// Each `w_j` lives on its own cell grid and is resampled by trigonometric
/// interpolation. Requires at least two ambient samples per oscillation period
/// (`r G / m ≥ 2`) and, for plateau cutoffs, a transition layer of at least one cell.
pub fn recovery_sequence(
    pieces: &[(&[f64], &PeriodicField)],
    r: f64,
    m: usize,
    cutoff: CubeCutoff,
    grid: &TorusGrid,
) -> Result<RecoveryField> {
    let n = grid.dim();
    let g = grid.size() as f64;
    if !(r > 0.0 && r <= 1.0) || m == 0 {
        return Err(Error::Usage(format!("need 0 < r ≤ 1 and m ≥ 1, got r = {r}, m = {m}")));
    }
    if r * g / (m as f64) < 2.0 - 1e-12 {
        return Err(Error::Resolution(format!(
            "G = {} gives {:.3} samples per period for r = {r}, m = {m}; need at least 2",
            grid.size(),
            r * g / m as f64
        )));
    }
    let delta = cutoff.shell_width(n, r);
    if matches!(cutoff, CubeCutoff::Plateau { .. }) && delta < 1.0 / g {
        return Err(Error::Resolution(format!(
            "cutoff {} has a transition layer of width {delta:.3e}, thinner than one cell 1/{}",
            cutoff.label(),
            grid.size()
        )));
    }
    let components = pieces.first().map_or(0, |(_, w)| w.components());
    let mut z = PeriodicField::zeros(grid, components);
    let mut shell_cells = 0usize;
    let mut offset = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut val = vec![0.0; components];
    for (x0, w) in pieces {
        if w.components() != components || w.grid().dim() != n || x0.len() != n {
            return Err(Error::GridMismatch("recovery pieces disagree in shape".into()));
        }
        let interp = Interpolator::new(w);
        for idx in 0..grid.len() {
            let x = grid.position(idx);
            wrapped_offset(&x, x0, &mut offset);
            if offset.iter().any(|s| s.abs() > r / 2.0) {
                continue;
            }
            let phi = cutoff.eval(&offset, r, delta);
            let inside = offset.iter().all(|&s| -r / 2.0 <= s && s < r / 2.0);
            if inside && phi != 1.0 {
                shell_cells += 1;
            }
            if phi == 0.0 {
                continue;
            }
            for (ya, oa) in y.iter_mut().zip(&offset) {
                *ya = m as f64 * oa / r;
            }
            interp.eval(&y, &mut val);
            for (zc, vc) in z.at_mut(idx).iter_mut().zip(&val) {
                *zc += phi * vc;
            }
        }
    }
    Ok(RecoveryField {
        field: z,
        shell_measure: shell_cells as f64 * grid.cell_volume(),
    })
}

/// Smooth laminate `b sin(2π n·y)` on `grid`, with `b = P(n) g` for the first
/// of the vectors `g = (1, -1, 1, …)`, `e_1`, …, `e_d` that the kernel projector
/// does not annihilate, scaled to unit length. Free for the frozen operator.
pub fn plane_wave(frozen: &FrozenSymbol, grid: &TorusGrid, direction: &[i64]) -> Result<PeriodicField> {
    let d = frozen.dims().field;
    if direction.len() != grid.dim() || direction.iter().all(|&k| k == 0) {
        return Err(Error::Usage(format!("plane wave direction {direction:?} must be a nonzero {}-vector", grid.dim())));
    }
    let n: Vec<f64> = direction.iter().map(|&k| k as f64).collect();
    let p = frozen.projector(&n)?;
    let alternating = DVector::from_fn(d, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let b = std::iter::once(alternating)
        .chain((0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 })))
        .map(|g| &p * g)
        .find(|b| b.norm() > 1e-8)
        .ok_or_else(|| Error::Usage(format!("operator has no free amplitude along {direction:?}")))?;
    let b = &b / b.norm();
    Ok(PeriodicField::from_fn(grid, d, |y, o| {
        let phase: f64 = y.iter().zip(&n).map(|(a, k)| a * k).sum();
        let s = (2.0 * std::f64::consts::PI * phase).sin();
        for (oc, bc) in o.iter_mut().zip(b.iter()) {
            *oc = s * bc;
        }
    }))
}

/// Grid average of `f(x, u(x), v(x) + z(x))`.
pub fn field_energy(density: &dyn EnergyDensity, u: &PeriodicField, v: &PeriodicField, z: Option<&PeriodicField>) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch(format!("u on {:?}, v on {:?}", u.grid(), v.grid())));
    }
    if let Some(z) = z {
        v.ensure_compatible(z)?;
    }
    let grid = v.grid();
    let mut point = vec![0.0; v.components()];
    let mut sum = 0.0;
    for idx in 0..grid.len() {
        point.copy_from_slice(v.at(idx));
        if let Some(z) = z {
            point.iter_mut().zip(z.at(idx)).for_each(|(p, s)| *p += s);
        }
        sum += density.eval(&grid.position(idx), u.at(idx), &point);
    }
    Ok(sum / grid.len() as f64)
}

/// `‖𝒜 v‖_{W^{-1,q}}` surrogate on the grid of `v`.
pub fn admissibility_residual(coeffs: &dyn CoefficientField, v: &PeriodicField, q: f64) -> Result<f64> {
    apply_a(coeffs, v)?.wm1q_norm(q)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOptions {
    /// Tile sides, coarse to fine; each must be `1/K`.
    pub r_ladder: Vec<f64>,
    pub m_ladder: Vec<usize>,
    pub cutoff: CubeCutoff,
    /// Exponent of the `W^{-1,q}` residuals; defaults to the density's growth exponent.
    pub residual_exponent: Option<f64>,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            r_ladder: vec![0.5, 0.25],
            m_ladder: vec![2, 4, 8],
            cutoff: CubeCutoff::Full,
            residual_exponent: None,
        }
    }
}

#[derive(Clone)]
pub struct RelaxationQuery {
    pub density: Arc<dyn EnergyDensity>,
    pub coeffs: Arc<dyn CoefficientField>,
    pub u: PeriodicField,
    pub v: PeriodicField,
    /// Quadrature for the envelope integral; tiles of the finest `r` by default.
    pub quadrature: Quadrature,
    pub solver: SolverOptions,
    pub recovery: RecoveryOptions,
    /// Largest accepted `‖𝒜 v‖_{W^{-1,q}}`.
    pub admissibility_threshold: f64,
}

impl RelaxationQuery {
    pub fn new(
        density: Arc<dyn EnergyDensity>,
        coeffs: Arc<dyn CoefficientField>,
        u: PeriodicField,
        v: PeriodicField,
        solver: SolverOptions,
        recovery: RecoveryOptions,
    ) -> Result<Self> {
        let dims = coeffs.dims();
        if v.components() != dims.field || v.grid().dim() != dims.space {
            return Err(Error::GridMismatch(format!(
                "v has {} components in {} dimensions, operator `{}` needs {} in {}",
                v.components(),
                v.grid().dim(),
                coeffs.label(),
                dims.field,
                dims.space
            )));
        }
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch(format!("u on {:?}, v on {:?}", u.grid(), v.grid())));
        }
        if recovery.r_ladder.is_empty() || recovery.m_ladder.is_empty() {
            return Err(Error::Config("recovery needs nonempty r and m ladders".into()));
        }
        for &r in &recovery.r_ladder {
            tiles_per_axis(r)?;
        }
        if let CubeCutoff::Plateau { mu } = recovery.cutoff {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::Config(format!("plateau tolerance μ must lie in (0, 1), got {mu}")));
            }
        }
        let finest = recovery.r_ladder.iter().cloned().fold(f64::INFINITY, f64::min);
        let quadrature = Quadrature::tiles(dims.space, finest)?;
        let query = Self {
            density,
            coeffs,
            u,
            v,
            quadrature,
            solver,
            recovery,
            admissibility_threshold: 1e-8,
        };
        let residual = admissibility_residual(query.coeffs.as_ref(), &query.v, query.residual_exponent())?;
        if residual > query.admissibility_threshold {
            return Err(Error::Usage(format!(
                "v is not 𝒜-free: ‖𝒜v‖ = {residual:.3e} exceeds {:.1e}",
                query.admissibility_threshold
            )));
        }
        Ok(query)
    }

    pub fn residual_exponent(&self) -> f64 {
        self.recovery.residual_exponent.unwrap_or(self.density.growth().q)
    }
}

#[derive(Debug, Clone)]
pub struct PointEnvelope {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub weight: f64,
    pub result: EnvelopeResult,
}

#[derive(Debug, Clone)]
pub struct RelaxedIntegral {
    pub value: f64,
    pub points: Vec<PointEnvelope>,
}

fn solve_points(query: &RelaxationQuery, points: &[Vec<f64>], weights: &[f64]) -> Result<Vec<PointEnvelope>> {
    let iu = Interpolator::new(&query.u);
    let iv = Interpolator::new(&query.v);
    points
        .par_iter()
        .zip(weights)
        .map(|(x, &weight)| {
            let mut u0 = vec![0.0; iu.components()];
            let mut v0 = vec![0.0; iv.components()];
            iu.eval(x, &mut u0);
            iv.eval(x, &mut v0);
            let cell = EnvelopeQuery::new(
                query.density.clone(),
                query.coeffs.as_ref(),
                x,
                &u0,
                &v0,
                query.solver.clone(),
            )?;
            Ok(PointEnvelope {
                x: x.clone(),
                u: u0,
                v: v0,
                weight,
                result: minimize_cell(&cell)?,
            })
        })
        .collect()
}

/// `Σ_j w_j Q_{𝒜(x_j)} f(x_j, u(x_j), v(x_j))` over the query's quadrature.
pub fn relaxed_integral(query: &RelaxationQuery) -> Result<RelaxedIntegral> {
    let points = solve_points(query, &query.quadrature.points, &query.quadrature.weights)?;
    let value = points.iter().map(|p| p.weight * p.result.value).sum();
    Ok(RelaxedIntegral { value, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub r: f64,
    pub m: usize,
    pub energy: f64,
    /// `‖𝒜(v + z)‖_{W^{-1,q}}`.
    pub residual: f64,
    pub shell_measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhsTable {
    pub entries: Vec<LadderEntry>,
    /// Minimum energy over the entries sharing the last entry's `r`.
    pub liminf: f64,
}

/// Energies and residuals of `v + z` for each recovery field `(r, m, z)`.
pub fn sequence_energy(query: &RelaxationQuery, fields: &[(f64, usize, RecoveryField)]) -> Result<LhsTable> {
    let q = query.residual_exponent();
    let mut entries = Vec::with_capacity(fields.len());
    for (r, m, z) in fields {
        let total = query.v.add(&z.field)?;
        entries.push(LadderEntry {
            r: *r,
            m: *m,
            energy: field_energy(query.density.as_ref(), &query.u, &query.v, Some(&z.field))?,
            residual: admissibility_residual(query.coeffs.as_ref(), &total, q)?,
            shell_measure: z.shell_measure,
        });
    }
    let last_r = entries.last().map(|e| e.r);
    let liminf = entries
        .iter()
        .filter(|e| Some(e.r) == last_r)
        .map(|e| e.energy)
        .fold(f64::INFINITY, f64::min);
    Ok(LhsTable { entries, liminf })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapTolerance {
    /// Allowed amount by which any sequence energy may undershoot the envelope integral.
    pub lower: f64,
    pub upper_relative: f64,
    pub upper_absolute: f64,
}

impl Default for GapTolerance {
    fn default() -> Self {
        Self {
            lower: 1e-3,
            upper_relative: 0.05,
            upper_absolute: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub rhs: f64,
    pub liminf: f64,
    /// `liminf - rhs`.
    pub gap: f64,
    pub min_energy: f64,
    pub lower_bound_holds: bool,
    pub pass: bool,
}

pub fn theorem_gap(rhs: f64, lhs: &LhsTable, tol: GapTolerance) -> GapReport {
    let gap = lhs.liminf - rhs;
    let min_energy = lhs.entries.iter().map(|e| e.energy).fold(f64::INFINITY, f64::min);
    let lower_bound_holds = min_energy >= rhs - tol.lower;
    let upper = tol.upper_absolute.max(tol.upper_relative * rhs.abs());
    GapReport {
        rhs,
        liminf: lhs.liminf,
        gap,
        min_energy,
        lower_bound_holds,
        pass: lower_bound_holds && gap >= -tol.lower && gap <= upper,
    }
}

#[derive(Debug, Clone)]
pub struct RelaxationReport {
    pub rhs: RelaxedIntegral,
    pub lhs: LhsTable,
    pub gap: GapReport,
}

/// Runs both sides: envelope integral, recovery fields over the `(r, m)` ladder, and the gap.
pub fn relax(query: &RelaxationQuery, tol: GapTolerance) -> Result<RelaxationReport> {
    let rhs = relaxed_integral(query)?;
    let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let mut minimizers: HashMap<Vec<u64>, PeriodicField> = rhs
        .points
        .iter()
        .map(|p| (key(&p.x), p.result.minimizer.clone()))
        .collect();
    let dim = query.v.grid().dim();
    let mut fields = Vec::new();
    for &r in &query.recovery.r_ladder {
        let tiles = Quadrature::tiles(dim, r)?;
        let missing: Vec<Vec<f64>> = tiles
            .points
            .iter()
            .filter(|x| !minimizers.contains_key(&key(x)))
            .cloned()
            .collect();
        let weights = vec![0.0; missing.len()];
        for p in solve_points(query, &missing, &weights)? {
            minimizers.insert(key(&p.x), p.result.minimizer);
        }
        let pieces: Vec<(&[f64], &PeriodicField)> = tiles
            .points
            .iter()
            .map(|x| (x.as_slice(), &minimizers[&key(x)]))
            .collect();
        for &m in &query.recovery.m_ladder {
            let z = recovery_sequence(&pieces, r, m, query.recovery.cutoff, query.v.grid())?;
            fields.push((r, m, z));
        }
    }
    let lhs = sequence_energy(query, &fields)?;
    let gap = theorem_gap(rhs.value, &lhs, tol);
    Ok(RelaxationReport { rhs, lhs, gap })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualLadder {
    pub r: Vec<f64>,
    pub residual: Vec<f64>,
    pub slope: f64,
    /// `N/q + 1`.
    pub expected_slope: f64,
}

/// `‖𝒜 z^r_m‖_{W^{-1,q}}` for a single cube at `x0` over the `r` ladder, with its log-log slope.
pub fn residual_ladder(
    coeffs: &dyn CoefficientField,
    x0: &[f64],
    w: &PeriodicField,
    q: f64,
    rs: &[f64],
    m: usize,
    cutoff: CubeCutoff,
    grid: &TorusGrid,
) -> Result<ResidualLadder> {
    if rs.len() < 2 {
        return Err(Error::Usage("a residual ladder needs at least two values of r".into()));
    }
    let mut residual = Vec::with_capacity(rs.len());
    for &r in rs {
        let z = recovery_sequence(&[(x0, w)], r, m, cutoff, grid)?;
        residual.push(admissibility_residual(coeffs, &z.field, q)?);
    }
    Ok(ResidualLadder {
        slope: loglog_slope(rs, &residual),
        expected_slope: grid.dim() as f64 / q + 1.0,
        r: rs.to_vec(),
        residual,
    })
}
