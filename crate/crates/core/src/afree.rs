//! Projection onto mean-zero periodic fields annihilated by the frozen operator
//! `Σ A^i(x0) ∂/∂y_i`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symbols::{CoefficientField, FrozenSymbol};
use crate::torus::{PeriodicField, Spectrum, TorusGrid, C64};

/// Frozen-coefficient test space on a torus grid.
#[derive(Debug, Clone)]
pub struct AFreeTestSpace {
    frozen: FrozenSymbol,
    grid: TorusGrid,
    /// `P(x0, k)` indexed by spectral index; `None` at `k = 0`.
    projectors: Vec<Option<DMatrix<f64>>>,
}

pub fn build_test_space(coeffs: &dyn CoefficientField, x0: &[f64], grid: &TorusGrid) -> Result<AFreeTestSpace> {
    let frozen = FrozenSymbol::new(coeffs, x0)?;
    AFreeTestSpace::from_frozen(frozen, grid)
}

impl AFreeTestSpace {
    pub fn from_frozen(frozen: FrozenSymbol, grid: &TorusGrid) -> Result<Self> {
        if frozen.dims().space != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "operator acts in {} dimensions, grid has {}",
                frozen.dims().space,
                grid.dim()
            )));
        }
        // P(k) = P(k/|k|): cache by direction so each distinct ray is decomposed once
        let mut by_direction: std::collections::HashMap<Vec<i64>, DMatrix<f64>> = Default::default();
        let mut projectors = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let Some(k) = grid.symbol_frequency(idx) else {
                projectors.push(None);
                continue;
            };
            let key = primitive_direction(&k);
            let p = match by_direction.get(&key) {
                Some(p) => p.clone(),
                None => {
                    let p = frozen.projector(&k)?;
                    by_direction.insert(key, p.clone());
                    p
                }
            };
            projectors.push(Some(p));
        }
        Ok(Self {
            frozen,
            grid: grid.clone(),
            projectors,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn frozen(&self) -> &FrozenSymbol {
        &self.frozen
    }

    pub fn components(&self) -> usize {
        self.frozen.dims().field
    }

    pub fn projector(&self, idx: usize) -> Option<&DMatrix<f64>> {
        self.projectors[idx].as_ref()
    }

    /// Dimension of the discrete space: sum of projector ranks over nonzero modes.
    pub fn dimension(&self) -> usize {
        self.projectors
            .iter()
            .flatten()
            .map(|p| p.trace().round() as usize)
            .sum()
    }

    fn check(&self, w: &PeriodicField) -> Result<()> {
        if w.grid() != &self.grid || w.components() != self.components() {
            return Err(Error::GridMismatch(format!(
                "field on {:?} with {} components, test space on {:?} with {}",
                w.grid(),
                w.components(),
                self.grid,
                self.components()
            )));
        }
        Ok(())
    }

    /// Applies `P(x0, k)` mode by mode and removes the mean.
    pub fn project_spectrum(&self, spec: &mut Spectrum) {
        let d = self.components();
        let mut buf = DVector::<C64>::zeros(d);
        for (idx, p) in self.projectors.iter().enumerate() {
            match p {
                None => spec.set_mode(idx, &vec![C64::new(0.0, 0.0); d]),
                Some(p) => {
                    for c in 0..d {
                        buf[c] = spec.coeff(c, idx);
                    }
                    let out = p.map(|v| C64::new(v, 0.0)) * &buf;
                    spec.set_mode(idx, out.as_slice());
                }
            }
        }
    }

    pub fn project(&self, w: &PeriodicField) -> Result<PeriodicField> {
        self.check(w)?;
        let mut spec = w.spectrum();
        self.project_spectrum(&mut spec);
        Ok(spec.to_field())
    }

    /// `‖𝔸(x0, 2πik) ŵ(k)‖_{W^{-1,2}} / ‖w‖_{L²}`, zero for the zero field.
    pub fn constraint_residual(&self, w: &PeriodicField) -> Result<f64> {
        self.check(w)?;
        let norm = w.lq_norm(2.0)?;
        if norm == 0.0 {
            return Ok(0.0);
        }
        let spec = w.spectrum();
        let l = self.frozen.dims().equations;
        let mut out = Spectrum::zeros(&self.grid, l);
        for idx in 0..self.grid.len() {
            let Some(k) = self.grid.symbol_frequency(idx) else { continue };
            let a = self.frozen.matrix(&k);
            for e in 0..l {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..self.components() {
                    acc += spec.coeff(c, idx) * a[(e, c)];
                }
                out.set_coeff(e, idx, acc * C64::new(0.0, 2.0 * PI));
            }
        }
        Ok(out.to_field().wm1q_norm(2.0)? / norm)
    }
}

fn primitive_direction(k: &[f64]) -> Vec<i64> {
    let ints: Vec<i64> = k.iter().map(|&c| c.round() as i64).collect();
    let g = ints.iter().fold(0i64, |acc, &v| gcd(acc, v.abs()));
    ints.iter().map(|&v| v / g.max(1)).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { gcd(b, a % b) }
}
