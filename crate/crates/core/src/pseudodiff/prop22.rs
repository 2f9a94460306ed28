//! Empirical constants for the four `P_η` bounds over random ensembles.
//!
//! For each field `v` the ratios are
//!
//! 1. `‖P_η v‖_q / ‖v‖_q`
//! 2. `‖P_η v‖_{-1,q} / ‖v‖_{-1,q}`
//! 3. `‖v - P_η v‖_{L^q(Ω')} / (‖𝒜_η v‖_{-1,q} + ‖v‖_{-1,q})`, `Ω' = {η = 1}`
//! 4. `‖𝒜_η P_η v‖_{-1,q} / ‖v‖_{-1,q}`
//!
//! and the reported constant is the maximum over the ensemble.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cutoff::SpatialCutoff;
use super::{apply_a_eta, PEtaSymbol, QuantizedOperator};
use crate::error::{Error, Result};
use crate::symbols::CoefficientField;
use crate::torus::{PeriodicField, Spectrum, TorusGrid, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// Flat spectrum on `|k_a| ≤ G/4`.
    White,
    /// Amplitudes `1/|k|` on `|k_a| ≤ G/4`.
    Pink,
    /// Gaussian bumps of width two cells at random centres.
    Concentrated,
}

impl Ensemble {
    pub const ALL: [Ensemble; 3] = [Ensemble::White, Ensemble::Pink, Ensemble::Concentrated];

    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::White => "white",
            Ensemble::Pink => "pink",
            Ensemble::Concentrated => "concentrated",
        }
    }

    pub fn sample(&self, grid: &TorusGrid, components: usize, rng: &mut ChaCha8Rng) -> PeriodicField {
        match self {
            Ensemble::White | Ensemble::Pink => {
                let band = (grid.size() / 4) as i64;
                let mut spec = Spectrum::zeros(grid, components);
                for idx in 1..grid.len() {
                    if grid.frequency(idx).iter().any(|k| k.abs() > band) {
                        continue;
                    }
                    let amp = match self {
                        Ensemble::Pink => 1.0 / grid.frequency_norm(idx),
                        _ => 1.0,
                    };
                    for c in 0..components {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        spec.set_coeff(c, idx, C64::new(re, im) * amp);
                    }
                }
                spec.to_field()
            }
            Ensemble::Concentrated => {
                let width = 2.0 / grid.size() as f64;
                let centre: Vec<f64> = (0..grid.dim()).map(|_| rng.random_range(-0.5..0.5)).collect();
                let dir: Vec<f64> = (0..components).map(|_| rng.sample(StandardNormal)).collect();
                PeriodicField::from_fn(grid, components, |x, o| {
                    let r2: f64 = x
                        .iter()
                        .zip(&centre)
                        .map(|(a, b)| {
                            let d = (a - b + 0.5).rem_euclid(1.0) - 0.5;
                            d * d
                        })
                        .sum();
                    let e = (-r2 / (2.0 * width * width)).exp();
                    for (oc, dc) in o.iter_mut().zip(&dir) {
                        *oc = e * dc;
                    }
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop22Options {
    pub exponents: Vec<f64>,
    pub ensemble_size: usize,
    pub ladder: Vec<usize>,
    pub k_ref: f64,
    pub seed: u64,
}

impl Default for Prop22Options {
    fn default() -> Self {
        Self {
            exponents: vec![1.5, 2.0, 3.0],
            ensemble_size: 8,
            ladder: vec![8, 16, 32],
            k_ref: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop22Row {
    pub grid_size: usize,
    pub q: f64,
    /// 1 to 4, in the order of the module documentation.
    pub inequality: usize,
    pub ensemble: Ensemble,
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Prop22Table {
    pub operator: String,
    pub cutoff: String,
    pub rows: Vec<Prop22Row>,
}

impl Prop22Table {
    /// Maximum over ensembles for one grid, exponent and inequality.
    pub fn constant(&self, grid_size: usize, q: f64, inequality: usize) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.grid_size == grid_size && r.q == q && r.inequality == inequality)
            .map(|r| r.max_ratio)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Ratio of the constant on the finest grid to that on the coarsest.
    ///
    /// Constants below `1e-10` are roundoff (e.g. `𝒜_η P_η v` for constant
    /// coefficients and `η ≡ 1`) and are raised to that floor before dividing.
    pub fn growth(&self, q: f64, inequality: usize) -> f64 {
        const FLOOR: f64 = 1e-10;
        let sizes: Vec<usize> = self.rows.iter().map(|r| r.grid_size).collect();
        let lo = *sizes.iter().min().unwrap_or(&0);
        let hi = *sizes.iter().max().unwrap_or(&0);
        self.constant(hi, q, inequality).max(FLOOR) / self.constant(lo, q, inequality).max(FLOOR)
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.max_ratio.is_finite())
    }
}

fn lq_on_set(v: &PeriodicField, q: f64, mask: &[bool]) -> f64 {
    let sum: f64 = (0..v.grid().len())
        .filter(|&i| mask[i])
        .map(|i| v.magnitude(i).powf(q))
        .sum();
    (sum * v.grid().cell_volume()).powf(1.0 / q)
}

pub fn verify_prop22(
    coeffs: Arc<dyn CoefficientField>,
    eta: Arc<dyn SpatialCutoff>,
    options: &Prop22Options,
) -> Result<Prop22Table> {
    if options.ensemble_size == 0 || options.ladder.is_empty() {
        return Err(Error::Config("prop22 needs a nonempty ensemble and ladder".into()));
    }
    for &q in &options.exponents {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::Usage(format!("exponent must lie in (1, ∞), got {q}")));
        }
    }
    let d = coeffs.dims().field;
    let symbol = PEtaSymbol::new(coeffs.clone(), eta.clone(), options.k_ref)?;
    let mut rows = Vec::new();
    for &g in &options.ladder {
        let grid = TorusGrid::new(coeffs.dims().space, g)?;
        let op = QuantizedOperator::new(&symbol, &grid)?;
        let mask: Vec<bool> = (0..grid.len()).map(|i| eta.is_one(&grid.position(i))).collect();
        for (e_idx, ensemble) in Ensemble::ALL.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ ((g as u64) << 32) ^ ((e_idx as u64 + 1) * 0x9E37_79B9));
            let mut maxima = vec![[0.0f64; 4]; options.exponents.len()];
            for _ in 0..options.ensemble_size {
                let v = ensemble.sample(&grid, d, &mut rng);
                let pv = op.apply(&v)?;
                let rest = v.sub(&pv)?;
                let av = apply_a_eta(coeffs.as_ref(), eta.as_ref(), &v)?;
                let apv = apply_a_eta(coeffs.as_ref(), eta.as_ref(), &pv)?;
                for (qi, &q) in options.exponents.iter().enumerate() {
                    let v_wm1 = v.wm1q_norm(q)?;
                    let ratios = [
                        pv.lq_norm(q)? / v.lq_norm(q)?,
                        pv.wm1q_norm(q)? / v_wm1,
                        lq_on_set(&rest, q, &mask) / (av.wm1q_norm(q)? + v_wm1),
                        apv.wm1q_norm(q)? / v_wm1,
                    ];
                    for (m, r) in maxima[qi].iter_mut().zip(ratios) {
                        // NaN must surface in the table rather than be swallowed by max
                        *m = if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) };
                    }
                }
            }
            for (qi, &q) in options.exponents.iter().enumerate() {
                for (i, &m) in maxima[qi].iter().enumerate() {
                    rows.push(Prop22Row {
                        grid_size: g,
                        q,
                        inequality: i + 1,
                        ensemble: *ensemble,
                        max_ratio: m,
                    });
                }
            }
        }
    }
    Ok(Prop22Table {
        operator: coeffs.label(),
        cutoff: eta.label(),
        rows,
    })
}
