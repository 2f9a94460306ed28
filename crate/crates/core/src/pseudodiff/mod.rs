//! Left (Kohn–Nirenberg) quantization of matrix symbols `σ(x, k)` on the torus
//! grid: `(Op σ) v (x) = Re Σ_k σ(x, k) v̂(k) e^{2πik·x}`.
//!
//! Symbols are factored as `weight(x) · core(x, k)`. When the core does not
//! depend on `x` the operator is a Fourier multiplier followed by a pointwise
//! product, applied in `O(G^N log G)`; otherwise the symbol is tabulated once
//! per grid and summed directly in `O(G^{2N})`.

pub mod cutoff;
pub mod decompose;
pub mod prop22;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::symbols::{assemble_symbol, kernel_projector, CoefficientField, FrozenSymbol};
use crate::torus::{PeriodicField, Spectrum, TorusGrid, C64};

pub use cutoff::{chi, SpatialCutoff};
pub use decompose::{decompose_equiintegrable, perturbation_stability, DecompositionReport};
pub use prop22::{verify_prop22, Ensemble, Prop22Options, Prop22Table};

/// Frequency of a mode as seen by a symbol: the direction vector from
/// [`TorusGrid::symbol_frequency`] (zero for the mean) and the true `|k|`.
#[derive(Debug, Clone, Copy)]
pub struct Mode<'a> {
    pub freq: &'a [f64],
    pub norm: f64,
}

pub trait SymbolFunction: Send + Sync {
    /// `(rows, cols)` of the symbol matrix.
    fn shape(&self) -> (usize, usize);
    /// Degree of homogeneity in `k` for large `|k|`, if any.
    fn homogeneity(&self) -> Option<i32> {
        None
    }
    fn weight(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn core(&self, x: &[f64], mode: Mode<'_>) -> Result<DMatrix<C64>>;
    fn core_depends_on_x(&self) -> bool {
        true
    }
    fn eval(&self, x: &[f64], mode: Mode<'_>) -> Result<DMatrix<C64>> {
        Ok(self.core(x, mode)? * C64::new(self.weight(x), 0.0))
    }
}

/// Upper bound on the symbol table of the direct path.
const TABLE_LIMIT_BYTES: usize = 1 << 30;

enum Kernel {
    Multiplier {
        weight: Vec<f64>,
        modes: Vec<DMatrix<C64>>,
    },
    Direct {
        /// Grid points where the weight is nonzero.
        active: Vec<usize>,
        /// `table[(a * modes + m) * rows * cols + r * cols + c]`.
        table: Vec<C64>,
    },
}

/// A symbol tabulated on a grid, reusable across many fields.
pub struct QuantizedOperator {
    grid: TorusGrid,
    rows: usize,
    cols: usize,
    kernel: Kernel,
}

fn mode_data(grid: &TorusGrid) -> Vec<(Vec<f64>, f64)> {
    (0..grid.len())
        .map(|idx| {
            let freq = grid.symbol_frequency(idx).unwrap_or_else(|| vec![0.0; grid.dim()]);
            (freq, grid.frequency_norm(idx))
        })
        .collect()
}

impl QuantizedOperator {
    /// Picks the multiplier path when the core is `x`-independent.
    pub fn new(symbol: &dyn SymbolFunction, grid: &TorusGrid) -> Result<Self> {
        if symbol.core_depends_on_x() {
            Self::direct(symbol, grid)
        } else {
            Self::multiplier(symbol, grid)
        }
    }

    fn multiplier(symbol: &dyn SymbolFunction, grid: &TorusGrid) -> Result<Self> {
        let (rows, cols) = symbol.shape();
        let origin = vec![0.0; grid.dim()];
        let modes = mode_data(grid)
            .iter()
            .map(|(f, n)| symbol.core(&origin, Mode { freq: f, norm: *n }))
            .collect::<Result<Vec<_>>>()?;
        let weight = (0..grid.len()).map(|i| symbol.weight(&grid.position(i))).collect();
        Ok(Self {
            grid: grid.clone(),
            rows,
            cols,
            kernel: Kernel::Multiplier { weight, modes },
        })
    }

    /// Tabulates `σ(x, k)` at every grid point with nonzero weight.
    pub fn direct(symbol: &dyn SymbolFunction, grid: &TorusGrid) -> Result<Self> {
        let (rows, cols) = symbol.shape();
        let n = grid.len();
        let active: Vec<usize> = (0..n).filter(|&i| symbol.weight(&grid.position(i)) != 0.0).collect();
        let block = n * rows * cols;
        let bytes = active.len() * block * std::mem::size_of::<C64>();
        if bytes > TABLE_LIMIT_BYTES {
            return Err(Error::Resolution(format!(
                "symbol table for {:?} needs {} MiB; use a coarser grid or an x-independent symbol",
                grid,
                bytes >> 20
            )));
        }
        let modes = mode_data(grid);
        let rows_tables: Vec<Result<Vec<C64>>> = active
            .par_iter()
            .map(|&i| {
                let x = grid.position(i);
                let mut out = Vec::with_capacity(block);
                for (f, norm) in &modes {
                    let m = symbol.eval(&x, Mode { freq: f, norm: *norm })?;
                    for r in 0..rows {
                        for c in 0..cols {
                            out.push(m[(r, c)]);
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        let mut table = Vec::with_capacity(active.len() * block);
        for t in rows_tables {
            table.extend(t?);
        }
        Ok(Self {
            grid: grid.clone(),
            rows,
            cols,
            kernel: Kernel::Direct { active, table },
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn apply(&self, v: &PeriodicField) -> Result<PeriodicField> {
        if v.grid() != &self.grid || v.components() != self.cols {
            return Err(Error::GridMismatch(format!(
                "operator on {:?} acting on {} components, field on {:?} with {}",
                self.grid,
                self.cols,
                v.grid(),
                v.components()
            )));
        }
        let spec = v.spectrum();
        match &self.kernel {
            Kernel::Multiplier { weight, modes } => {
                let mut out = Spectrum::zeros(&self.grid, self.rows);
                for (idx, m) in modes.iter().enumerate() {
                    for r in 0..self.rows {
                        let mut acc = C64::new(0.0, 0.0);
                        for c in 0..self.cols {
                            acc += m[(r, c)] * spec.coeff(c, idx);
                        }
                        out.set_coeff(r, idx, acc);
                    }
                }
                let mut field = out.to_field();
                for (idx, w) in weight.iter().enumerate() {
                    field.at_mut(idx).iter_mut().for_each(|x| *x *= w);
                }
                Ok(field)
            }
            Kernel::Direct { active, table } => {
                let g = self.grid.size();
                let n = self.grid.len();
                let roots: Vec<C64> = (0..g).map(|p| C64::from_polar(1.0, 2.0 * PI * p as f64 / g as f64)).collect();
                let multis: Vec<Vec<usize>> = (0..n).map(|i| self.grid.multi_index(i)).collect();
                let coeffs: Vec<Vec<C64>> = (0..n).map(|m| spec.mode(m)).collect();
                let block = n * self.rows * self.cols;
                let rc = self.rows * self.cols;
                let values: Vec<Vec<f64>> = active
                    .par_iter()
                    .enumerate()
                    .map(|(a, &i)| {
                        let xi = &multis[i];
                        let row = &table[a * block..(a + 1) * block];
                        let mut acc = vec![C64::new(0.0, 0.0); self.rows];
                        for m in 0..n {
                            let phase = xi.iter().zip(&multis[m]).map(|(p, q)| p * q).sum::<usize>() % g;
                            let e = roots[phase];
                            let sm = &row[m * rc..(m + 1) * rc];
                            let cm = &coeffs[m];
                            for r in 0..self.rows {
                                let mut s = C64::new(0.0, 0.0);
                                for c in 0..self.cols {
                                    s += sm[r * self.cols + c] * cm[c];
                                }
                                acc[r] += s * e;
                            }
                        }
                        acc.iter().map(|z| z.re).collect()
                    })
                    .collect();
                let mut field = PeriodicField::zeros(&self.grid, self.rows);
                for (&i, vals) in active.iter().zip(values) {
                    field.at_mut(i).copy_from_slice(&vals);
                }
                Ok(field)
            }
        }
    }
}

/// `(Op σ) v`; tabulates the symbol for this single application.
pub fn quantize(symbol: &dyn SymbolFunction, v: &PeriodicField) -> Result<PeriodicField> {
    QuantizedOperator::new(symbol, v.grid())?.apply(v)
}

/// `𝒜_η(x, k) = η(x) 𝔸(x, 2πik)`.
pub struct AEtaSymbol {
    pub coeffs: Arc<dyn CoefficientField>,
    pub eta: Arc<dyn SpatialCutoff>,
}

impl SymbolFunction for AEtaSymbol {
    fn shape(&self) -> (usize, usize) {
        let d = self.coeffs.dims();
        (d.equations, d.field)
    }
    fn homogeneity(&self) -> Option<i32> {
        Some(1)
    }
    fn weight(&self, x: &[f64]) -> f64 {
        self.eta.eval(x)
    }
    fn core(&self, x: &[f64], mode: Mode<'_>) -> Result<DMatrix<C64>> {
        let s = assemble_symbol(self.coeffs.as_ref(), x, mode.freq)?;
        Ok(s.map(|v| C64::new(0.0, 2.0 * PI * v)))
    }
    fn core_depends_on_x(&self) -> bool {
        !self.coeffs.is_constant()
    }
}

/// `P_η(x, k) = η(x)² P(x, k) χ(|k| / k_ref)`.
pub struct PEtaSymbol {
    pub coeffs: Arc<dyn CoefficientField>,
    pub eta: Arc<dyn SpatialCutoff>,
    pub rank: usize,
    pub k_ref: f64,
}

impl PEtaSymbol {
    pub fn new(coeffs: Arc<dyn CoefficientField>, eta: Arc<dyn SpatialCutoff>, k_ref: f64) -> Result<Self> {
        if !(k_ref > 0.0) {
            return Err(Error::Config(format!("k_ref must be positive, got {k_ref}")));
        }
        let origin = vec![0.0; coeffs.dims().space];
        let rank = FrozenSymbol::new(coeffs.as_ref(), &origin)?.rank;
        Ok(Self { coeffs, eta, rank, k_ref })
    }
}

impl SymbolFunction for PEtaSymbol {
    fn shape(&self) -> (usize, usize) {
        let d = self.coeffs.dims().field;
        (d, d)
    }
    fn homogeneity(&self) -> Option<i32> {
        Some(0)
    }
    fn weight(&self, x: &[f64]) -> f64 {
        self.eta.eval(x).powi(2)
    }
    fn core(&self, x: &[f64], mode: Mode<'_>) -> Result<DMatrix<C64>> {
        let d = self.coeffs.dims().field;
        let c = chi(mode.norm / self.k_ref);
        if c == 0.0 {
            return Ok(DMatrix::zeros(d, d));
        }
        let s = assemble_symbol(self.coeffs.as_ref(), x, mode.freq)?;
        let p = kernel_projector(&s, self.rank).map_err(|e| match e {
            Error::RankViolation { expected, found, .. } => Error::RankViolation {
                expected,
                found,
                x: x.to_vec(),
                lambda: mode.freq.to_vec(),
            },
            other => other,
        })?;
        Ok(p.map(|v| C64::new(v * c, 0.0)))
    }
    fn core_depends_on_x(&self) -> bool {
        !self.coeffs.is_constant()
    }
}

/// `Σ_i A^i(x) ∂_i v`, with spectral derivatives.
pub fn apply_a(coeffs: &dyn CoefficientField, v: &PeriodicField) -> Result<PeriodicField> {
    let dims = coeffs.dims();
    let grid = v.grid();
    if v.components() != dims.field || grid.dim() != dims.space {
        return Err(Error::GridMismatch(format!(
            "operator `{}` expects {} components in {} dimensions",
            coeffs.label(),
            dims.field,
            dims.space
        )));
    }
    let derivs: Vec<PeriodicField> = (0..dims.space).map(|a| v.derivative(a)).collect();
    let mut out = PeriodicField::zeros(grid, dims.equations);
    for idx in 0..grid.len() {
        let mats = coeffs.coefficients(&grid.position(idx));
        let o = out.at_mut(idx);
        for (m, dv) in mats.iter().zip(&derivs) {
            let dv = dv.at(idx);
            for r in 0..dims.equations {
                o[r] += (0..dims.field).map(|c| m[(r, c)] * dv[c]).sum::<f64>();
            }
        }
    }
    Ok(out)
}

/// `η(x) Σ_i A^i(x) ∂_i v`.
pub fn apply_a_eta(coeffs: &dyn CoefficientField, eta: &dyn SpatialCutoff, v: &PeriodicField) -> Result<PeriodicField> {
    let mut out = apply_a(coeffs, v)?;
    for idx in 0..v.grid().len() {
        let e = eta.eval(&v.grid().position(idx));
        out.at_mut(idx).iter_mut().for_each(|x| *x *= e);
    }
    Ok(out)
}

/// `P_η v` with `k_ref = 1`.
pub fn apply_p_eta(coeffs: Arc<dyn CoefficientField>, eta: Arc<dyn SpatialCutoff>, v: &PeriodicField) -> Result<PeriodicField> {
    let symbol = PEtaSymbol::new(coeffs, eta, 1.0)?;
    quantize(&symbol, v)
}
