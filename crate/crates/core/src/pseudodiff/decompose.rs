//! Truncate–reproject construction of a `q`-equiintegrable companion sequence,
//! and the stability of cell energies under vanishing perturbations.

use std::sync::Arc;

use super::cutoff::SpatialCutoff;
use super::{apply_a, PEtaSymbol, QuantizedOperator};
use crate::densities::{growth_check, EnergyDensity};
use crate::error::{Error, Result};
use crate::symbols::CoefficientField;
use crate::torus::{PeriodicField, TorusGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionOptions {
    pub q: f64,
    pub mean_target: Vec<f64>,
    /// Tail levels, as multiples of the ensemble median `L^q` norm.
    pub level_factors: Vec<f64>,
    /// Exponents `s` at which `‖ṽ_n - v_n‖_{L^s}` is reported.
    pub s_ladder: Vec<f64>,
    /// Exponent of the `W^{-1,s}` residual comparison.
    pub residual_exponent: f64,
    /// `M_n = base · median · (n / n_min)^{growth}`.
    pub truncation_base: f64,
    pub truncation_growth: f64,
    pub k_ref: f64,
}

impl DecompositionOptions {
    pub fn new(q: f64, mean_target: Vec<f64>) -> Self {
        let s = q / 2.0 + 0.5;
        Self {
            q,
            mean_target,
            level_factors: vec![2.0, 4.0, 8.0, 16.0],
            s_ladder: vec![s, q],
            residual_exponent: s,
            truncation_base: 2.0,
            truncation_growth: 0.25,
            k_ref: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub q: f64,
    pub indices: Vec<f64>,
    /// Median of `‖v_n‖_q` over the ensemble.
    pub median_norm: f64,
    pub truncation_levels: Vec<f64>,
    pub levels: Vec<f64>,
    /// `tails_in[n][j] = tail(v_n, q, levels[j])`.
    pub tails_in: Vec<Vec<f64>>,
    pub tails_out: Vec<Vec<f64>>,
    pub s_ladder: Vec<f64>,
    /// `differences[n][j] = ‖ṽ_n - v_n‖_{L^{s_j}}`.
    pub differences: Vec<Vec<f64>>,
    /// `‖𝒜 v_n‖_{-1,s}`.
    pub residual_in: Vec<f64>,
    /// `‖𝒜 T_{M_n} v_n‖_{-1,s}`, the defect created by truncation.
    pub residual_truncation: Vec<f64>,
    /// `‖𝒜 ṽ_n‖_{-1,s}`.
    pub residual_out: Vec<f64>,
    pub mean_errors: Vec<f64>,
}

impl DecompositionReport {
    pub fn sup_tail_in(&self, level: usize) -> f64 {
        self.tails_in.iter().map(|t| t[level]).fold(0.0, f64::max)
    }

    pub fn sup_tail_out(&self, level: usize) -> f64 {
        self.tails_out.iter().map(|t| t[level]).fold(0.0, f64::max)
    }

    pub fn level_index(&self, factor: f64) -> Option<usize> {
        self.levels
            .iter()
            .position(|&m| (m - factor * self.median_norm).abs() <= 1e-12 * m.abs().max(1.0))
    }
}

/// `v_n = Π(n^{N/q} 1_{|x - x0| < 1/n} e_d)` for each `n`, projected onto the
/// fields that are free for the operator frozen at `x0`.
pub fn concentration_ensemble(
    coeffs: &dyn CoefficientField,
    x0: &[f64],
    grid: &TorusGrid,
    q: f64,
    indices: &[usize],
) -> Result<Vec<(f64, PeriodicField)>> {
    let space = crate::afree::build_test_space(coeffs, x0, grid)?;
    let d = space.components();
    indices
        .iter()
        .map(|&n| {
            let radius = 1.0 / n as f64;
            let height = (n as f64).powf(grid.dim() as f64 / q);
            let bump = PeriodicField::from_fn(grid, d, |x, o| {
                let r2: f64 = x
                    .iter()
                    .zip(x0)
                    .map(|(a, b)| {
                        let t = (a - b + 0.5).rem_euclid(1.0) - 0.5;
                        t * t
                    })
                    .sum();
                o[d - 1] = if r2 < radius * radius { height } else { 0.0 };
            });
            Ok((n as f64, space.project(&bump)?))
        })
        .collect()
}

/// Pointwise radial truncation `v · min(1, M/|v|)`.
pub fn truncate(v: &PeriodicField, level: f64) -> PeriodicField {
    let mut out = v.clone();
    for idx in 0..v.grid().len() {
        let m = v.magnitude(idx);
        if m > level {
            let s = level / m;
            out.at_mut(idx).iter_mut().for_each(|x| *x *= s);
        }
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// `ṽ_n = P_η(T_{M_n} v_n) - mean + mean_target` for each member `(n, v_n)`.
pub fn decompose_equiintegrable(
    coeffs: Arc<dyn CoefficientField>,
    eta: Arc<dyn SpatialCutoff>,
    members: &[(f64, PeriodicField)],
    options: &DecompositionOptions,
) -> Result<(Vec<PeriodicField>, DecompositionReport)> {
    let q = options.q;
    if members.is_empty() {
        return Err(Error::Usage("decomposition needs a nonempty ensemble".into()));
    }
    if options.mean_target.len() != coeffs.dims().field {
        return Err(Error::Config(format!(
            "mean target has {} components, expected {}",
            options.mean_target.len(),
            coeffs.dims().field
        )));
    }
    let grid = members[0].1.grid().clone();
    for (_, v) in members {
        if v.grid() != &grid {
            return Err(Error::GridMismatch("ensemble members live on different grids".into()));
        }
    }
    let norms = members.iter().map(|(_, v)| v.lq_norm(q)).collect::<Result<Vec<_>>>()?;
    let med = median(&norms);
    let n_min = members.iter().map(|(n, _)| *n).fold(f64::INFINITY, f64::min);
    let levels: Vec<f64> = options.level_factors.iter().map(|f| f * med).collect();
    let symbol = PEtaSymbol::new(coeffs.clone(), eta, options.k_ref)?;
    let op = QuantizedOperator::new(&symbol, &grid)?;
    let s_res = options.residual_exponent;

    let mut report = DecompositionReport {
        q,
        indices: members.iter().map(|(n, _)| *n).collect(),
        median_norm: med,
        truncation_levels: Vec::new(),
        levels: levels.clone(),
        tails_in: Vec::new(),
        tails_out: Vec::new(),
        s_ladder: options.s_ladder.clone(),
        differences: Vec::new(),
        residual_in: Vec::new(),
        residual_truncation: Vec::new(),
        residual_out: Vec::new(),
        mean_errors: Vec::new(),
    };
    let mut outputs = Vec::with_capacity(members.len());
    for (n, v) in members {
        let level = options.truncation_base * med * (n / n_min).powf(options.truncation_growth);
        let tv = truncate(v, level);
        let projected = op.apply(&tv)?;
        let mean = projected.mean();
        let shift: Vec<f64> = options.mean_target.iter().zip(&mean).map(|(t, m)| t - m).collect();
        let out = projected.add_constant(&shift);

        report.truncation_levels.push(level);
        report.tails_in.push(levels.iter().map(|&m| v.tail_function(q, m)).collect::<Result<_>>()?);
        report.tails_out.push(levels.iter().map(|&m| out.tail_function(q, m)).collect::<Result<_>>()?);
        let diff = out.sub(v)?;
        report.differences.push(
            options
                .s_ladder
                .iter()
                .map(|&s| diff.lq_norm(s))
                .collect::<Result<_>>()?,
        );
        report.residual_in.push(apply_a(coeffs.as_ref(), v)?.wm1q_norm(s_res)?);
        report.residual_truncation.push(apply_a(coeffs.as_ref(), &tv)?.wm1q_norm(s_res)?);
        report.residual_out.push(apply_a(coeffs.as_ref(), &out)?.wm1q_norm(s_res)?);
        report.mean_errors.push(
            out.mean()
                .iter()
                .zip(&options.mean_target)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        outputs.push(out);
    }
    Ok((outputs, report))
}

/// `Δ_n = |∫ f_n(y, w_n) - ∫ f_n(y, v_n + w_n)|` with `u` frozen at `u0`.
///
/// `densities` holds one density per member, or a single density used for all.
/// Densities whose declared growth exponent in `ξ` exceeds `q`, or whose declared
/// bound fails on samples, are rejected.
pub fn perturbation_stability(
    densities: &[Arc<dyn EnergyDensity>],
    u0: &[f64],
    w: &[PeriodicField],
    v: &[PeriodicField],
    q: f64,
) -> Result<Vec<f64>> {
    if w.len() != v.len() || densities.is_empty() || (densities.len() != 1 && densities.len() != w.len()) {
        return Err(Error::Usage("density, w and v sequences must have matching lengths".into()));
    }
    for f in densities {
        let g = f.growth();
        if g.q > q {
            return Err(Error::Usage(format!(
                "density `{}` grows like |ξ|^{} which exceeds q = {q}",
                f.label(),
                g.q
            )));
        }
        let d = w.first().map_or(1, |x| x.components());
        let n = w.first().map_or(1, |x| x.grid().dim());
        let report = growth_check(f.as_ref(), (n, u0.len(), d), 256, 17);
        if !report.passed {
            return Err(Error::Usage(format!(
                "density `{}` violates its declared growth bound (ratio {:.3})",
                f.label(),
                report.worst_ratio
            )));
        }
    }
    let mut out = Vec::with_capacity(w.len());
    for (i, (wn, vn)) in w.iter().zip(v).enumerate() {
        wn.ensure_compatible(vn)?;
        let f = &densities[if densities.len() == 1 { 0 } else { i }];
        let grid = wn.grid();
        let mut point = vec![0.0; wn.components()];
        let (mut a, mut b) = (0.0, 0.0);
        for idx in 0..grid.len() {
            let y = grid.position(idx);
            a += f.eval(&y, u0, wn.at(idx));
            for ((p, x), z) in point.iter_mut().zip(wn.at(idx)).zip(vn.at(idx)) {
                *p = x + z;
            }
            b += f.eval(&y, u0, &point);
        }
        out.push(((a - b) / grid.len() as f64).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afree::build_test_space;
    use crate::densities::{DoubleWell, Quadratic};
    use crate::pseudodiff::cutoff::One;
    use crate::symbols::ConstantCoefficients;
    use crate::torus::TorusGrid;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_field(grid: &TorusGrid, d: usize, seed: u64) -> PeriodicField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len() * d).map(|_| rng.random::<f64>() - 0.5).collect();
        PeriodicField::from_values(grid, d, values).unwrap()
    }

    #[test]
    fn truncation_caps_magnitude() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let v = random_field(&grid, 2, 1).scaled(10.0);
        let t = truncate(&v, 1.0);
        assert!(t.sup_norm() <= 1.0 + 1e-15);
        assert_eq!(truncate(&v, 1e9).values(), v.values());
    }

    #[test]
    fn equiintegrable_ensemble_is_left_alone() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let op: Arc<dyn CoefficientField> = Arc::new(ConstantCoefficients::div2d());
        let space = build_test_space(op.as_ref(), &[0.0, 0.0], &grid).unwrap();
        // laminate-type oscillations: bounded amplitude, all |k| > 2
        let members: Vec<(f64, PeriodicField)> = (0..4)
            .map(|i| {
                let k = (3 + i) as f64;
                let v = PeriodicField::from_fn(&grid, 2, |x, o| {
                    o[0] = (2.0 * PI * k * x[1]).sin();
                    o[1] = 0.5 * (2.0 * PI * 4.0 * x[0]).cos();
                });
                assert!(space.constraint_residual(&v).unwrap() < 1e-12);
                (k, v)
            })
            .collect();
        let opts = DecompositionOptions::new(2.0, vec![0.0, 0.0]);
        let (out, report) = decompose_equiintegrable(op, Arc::new(One), &members, &opts).unwrap();
        for ((_, v), o) in members.iter().zip(&out) {
            assert!(o.sub(v).unwrap().lq_norm(1.5).unwrap() <= 1e-6);
        }
        assert!(report.mean_errors.iter().all(|e| *e <= 1e-12));
    }

    #[test]
    fn perturbation_examples() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let w = PeriodicField::from_fn(&grid, 2, |x, o| {
            o[0] = if x[1] < 0.0 { 1.0 } else { -1.0 };
            o[1] = 0.0;
        });
        let quad: Arc<dyn EnergyDensity> = Arc::new(Quadratic);
        let dwell: Arc<dyn EnergyDensity> = Arc::new(DoubleWell);
        let zero = PeriodicField::zeros(&grid, 2);
        let d = perturbation_stability(&[dwell.clone()], &[0.0], &[w.clone()], &[zero], 4.0).unwrap();
        assert_eq!(d, vec![0.0]);

        let v = random_field(&grid, 2, 2).scaled(0.1);
        let d = perturbation_stability(&[quad], &[0.0], &[w.clone()], &[v.clone()], 2.0).unwrap();
        let closed = (v.add(&w).unwrap().lq_norm(2.0).unwrap().powi(2) - w.lq_norm(2.0).unwrap().powi(2)).abs();
        assert!((d[0] - closed).abs() < 1e-12);
        let vn = v.lq_norm(2.0).unwrap();
        assert!(d[0] <= vn * (vn + 2.0 * w.lq_norm(2.0).unwrap()) + 1e-12);

        assert!(matches!(
            perturbation_stability(&[dwell], &[0.0], &[w], &[v], 2.0),
            Err(Error::Usage(_))
        ));
    }
}
