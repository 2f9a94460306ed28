//! Built-in coefficient fields, addressable by label.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{CoefficientField, Dims};
use crate::error::{Error, Result};
use crate::registry::{expect_at_most, param, Registry};

/// Coefficients that do not depend on `x`.
#[derive(Debug, Clone)]
pub struct ConstantCoefficients {
    label: String,
    dims: Dims,
    matrices: Vec<DMatrix<f64>>,
}

impl ConstantCoefficients {
    pub fn new(label: impl Into<String>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Config("at least one coefficient matrix required".into()))?;
        let (l, d) = first.shape();
        if matrices.iter().any(|m| m.shape() != (l, d)) {
            return Err(Error::Config("coefficient matrices differ in shape".into()));
        }
        Ok(Self {
            label: label.into(),
            dims: Dims {
                space: matrices.len(),
                field: d,
                equations: l,
            },
            matrices,
        })
    }

    pub fn div2d() -> Self {
        Self::new(
            "div2d",
            vec![
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            ],
        )
        .expect("static shapes")
    }

    /// Symbol `[-λ2, λ1]`: the constraint `∂1 v2 - ∂2 v1 = 0`.
    pub fn scalar_curl2d() -> Self {
        Self::new(
            "scalar-curl2d",
            vec![
                DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
                DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]),
            ],
        )
        .expect("static shapes")
    }

    /// Cauchy-Riemann system; symbol has full rank 2 on the sphere.
    pub fn elliptic2d() -> Self {
        Self::new(
            "elliptic2d",
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
                DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            ],
        )
        .expect("static shapes")
    }

    /// `diag(λ1, λ2)`: rank drops on the coordinate axes.
    pub fn diag_nonconstant_rank() -> Self {
        Self::new(
            "diag-nonconstant-rank",
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            ],
        )
        .expect("static shapes")
    }
}

impl CoefficientField for ConstantCoefficients {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn dims(&self) -> Dims {
        self.dims
    }
    fn coefficients(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        self.matrices.clone()
    }
    fn lipschitz_bound(&self) -> f64 {
        0.0
    }
    fn is_constant(&self) -> bool {
        true
    }
}

pub type ScalarProfile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Divergence with a variable weight on the first derivative:
/// `A¹(x) = [a(x) 0]`, `A² = [0 1]`.
#[derive(Clone)]
pub struct ScaledDivergence {
    label: String,
    weight: ScalarProfile,
    lipschitz: f64,
    constant: bool,
}

impl ScaledDivergence {
    /// `a(x) = 1 + amplitude · sin(2π x₁)`.
    pub fn sine(amplitude: f64) -> Result<Self> {
        if amplitude.abs() >= 1.0 {
            return Err(Error::Config(format!(
                "scaled-div2d amplitude must satisfy |amp| < 1, got {amplitude}"
            )));
        }
        let label = if amplitude == 0.5 {
            "scaled-div2d".to_string()
        } else {
            format!("scaled-div2d({amplitude})")
        };
        Ok(Self {
            label,
            weight: Arc::new(move |x: &[f64]| 1.0 + amplitude * (2.0 * PI * x[0]).sin()),
            lipschitz: 2.0 * PI * amplitude.abs(),
            constant: amplitude == 0.0,
        })
    }

    pub fn constant(a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::Config(format!("weight must be positive, got {a}")));
        }
        Ok(Self {
            label: format!("const-div2d({a})"),
            weight: Arc::new(move |_| a),
            lipschitz: 0.0,
            constant: true,
        })
    }

    pub fn weight(&self, x: &[f64]) -> f64 {
        (self.weight)(x)
    }
}

impl CoefficientField for ScaledDivergence {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn dims(&self) -> Dims {
        Dims {
            space: 2,
            field: 2,
            equations: 1,
        }
    }
    fn coefficients(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![
            DMatrix::from_row_slice(1, 2, &[(self.weight)(x), 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        ]
    }
    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
    fn is_constant(&self) -> bool {
        self.constant
    }
}

/// A base field multiplied by a positive scalar function `s(x)`.
///
/// Multiplying every `A^i(x)` by the same positive scalar leaves the rank of
/// the symbol unchanged.
#[derive(Clone)]
pub struct ModulatedCoefficients {
    base: Arc<dyn CoefficientField>,
    factor: ScalarProfile,
    factor_lipschitz: f64,
    factor_sup: f64,
}

impl ModulatedCoefficients {
    pub fn new(
        base: Arc<dyn CoefficientField>,
        factor: ScalarProfile,
        factor_sup: f64,
        factor_lipschitz: f64,
    ) -> Self {
        Self {
            base,
            factor,
            factor_lipschitz,
            factor_sup,
        }
    }
}

impl CoefficientField for ModulatedCoefficients {
    fn label(&self) -> String {
        format!("modulated({})", self.base.label())
    }
    fn dims(&self) -> Dims {
        self.base.dims()
    }
    fn coefficients(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let s = (self.factor)(x);
        self.base.coefficients(x).into_iter().map(|m| m * s).collect()
    }
    fn lipschitz_bound(&self) -> f64 {
        // product rule with a crude sup bound on the base coefficients
        let probe = vec![0.0; self.base.dims().space];
        let base_sup = self
            .base
            .coefficients(&probe)
            .iter()
            .map(crate::linalg::frobenius)
            .fold(0.0, f64::max);
        self.factor_sup * self.base.lipschitz_bound() + self.factor_lipschitz * (base_sup + self.base.lipschitz_bound())
    }
}

pub fn registry() -> Registry<dyn CoefficientField> {
    let mut reg: Registry<dyn CoefficientField> = Registry::new("operator");
    reg.register("div2d", "divergence in 2-D, d=2, l=1", |p| {
        expect_at_most(p, 0, "div2d")?;
        Ok(Box::new(ConstantCoefficients::div2d()))
    });
    reg.register("scalar-curl2d", "scalar curl in 2-D, d=2, l=1", |p| {
        expect_at_most(p, 0, "scalar-curl2d")?;
        Ok(Box::new(ConstantCoefficients::scalar_curl2d()))
    });
    reg.register(
        "scaled-div2d",
        "a(x)∂1 v1 + ∂2 v2 with a(x) = 1 + amp·sin(2πx1), amp default 0.5",
        |p| {
            expect_at_most(p, 1, "scaled-div2d")?;
            Ok(Box::new(ScaledDivergence::sine(param(p, 0, 0.5))?))
        },
    );
    reg.register("const-div2d", "c·∂1 v1 + ∂2 v2 with constant c > 0", |p| {
        expect_at_most(p, 1, "const-div2d")?;
        Ok(Box::new(ScaledDivergence::constant(param(p, 0, 2.0))?))
    });
    reg.register("elliptic2d", "Cauchy-Riemann system, full rank", |p| {
        expect_at_most(p, 0, "elliptic2d")?;
        Ok(Box::new(ConstantCoefficients::elliptic2d()))
    });
    reg.register(
        "diag-nonconstant-rank",
        "diag(λ1, λ2); violates the constant rank condition",
        |p| {
            expect_at_most(p, 0, "diag-nonconstant-rank")?;
            Ok(Box::new(ConstantCoefficients::diag_nonconstant_rank()))
        },
    );
    reg
}
