//! Energy densities `f(x, u, ξ)` with growth data and analytic `ξ`-gradients.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::registry::{expect_at_most, param, Registry};

/// Constants of the bound `0 ≤ f(x,u,ξ) ≤ C(1 + |u|^p + |ξ|^q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub c: f64,
    pub p: f64,
    pub q: f64,
}

impl Growth {
    pub fn bound(&self, u: &[f64], xi: &[f64]) -> f64 {
        self.c * (1.0 + norm(u).powf(self.p) + norm(xi).powf(self.q))
    }
}

pub trait EnergyDensity: Send + Sync {
    fn label(&self) -> String;
    fn eval(&self, x: &[f64], u: &[f64], xi: &[f64]) -> f64;
    fn grad_xi(&self, x: &[f64], u: &[f64], xi: &[f64], out: &mut [f64]);
    fn growth(&self) -> Growth;
    /// Convex in `ξ` for every `(x, u)`.
    fn is_convex(&self) -> bool {
        false
    }
}

fn norm(v: &[f64]) -> f64 {
    norm2(v).sqrt()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// `|ξ|²`.
pub struct Quadratic;

impl EnergyDensity for Quadratic {
    fn label(&self) -> String {
        "quad".into()
    }
    fn eval(&self, _: &[f64], _: &[f64], xi: &[f64]) -> f64 {
        norm2(xi)
    }
    fn grad_xi(&self, _: &[f64], _: &[f64], xi: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(xi) {
            *o = 2.0 * v;
        }
    }
    fn growth(&self) -> Growth {
        Growth { c: 1.0, p: 2.0, q: 2.0 }
    }
    fn is_convex(&self) -> bool {
        true
    }
}

/// `(|ξ|² - 1)²`.
pub struct DoubleWell;

impl EnergyDensity for DoubleWell {
    fn label(&self) -> String {
        "dwell".into()
    }
    fn eval(&self, _: &[f64], _: &[f64], xi: &[f64]) -> f64 {
        let s = norm2(xi) - 1.0;
        s * s
    }
    fn grad_xi(&self, _: &[f64], _: &[f64], xi: &[f64], out: &mut [f64]) {
        let s = norm2(xi) - 1.0;
        for (o, v) in out.iter_mut().zip(xi) {
            *o = 4.0 * s * v;
        }
    }
    fn growth(&self) -> Growth {
        Growth { c: 2.0, p: 2.0, q: 4.0 }
    }
}

/// `|ξ|^q`.
pub struct PowerNorm {
    pub q: f64,
}

impl PowerNorm {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::Config(format!("pnorm exponent must lie in (1, ∞), got {q}")));
        }
        Ok(Self { q })
    }
}

impl EnergyDensity for PowerNorm {
    fn label(&self) -> String {
        format!("pnorm({})", self.q)
    }
    fn eval(&self, _: &[f64], _: &[f64], xi: &[f64]) -> f64 {
        norm(xi).powf(self.q)
    }
    fn grad_xi(&self, _: &[f64], _: &[f64], xi: &[f64], out: &mut [f64]) {
        let n = norm(xi);
        let s = if n == 0.0 { 0.0 } else { self.q * n.powf(self.q - 2.0) };
        for (o, v) in out.iter_mut().zip(xi) {
            *o = s * v;
        }
    }
    fn growth(&self) -> Growth {
        Growth { c: 1.0, p: self.q, q: self.q }
    }
    fn is_convex(&self) -> bool {
        true
    }
}

/// `(1 + |u|²)(|ξ|² - 1)² + b(x)|ξ|²` with `b(x) = 1 + ½cos(2πx₁)`.
///
/// Growth: `(1+|u|²)(|ξ|²-1)² ≤ 2(1+|u|²)(1+|ξ|⁴)`, and Young's inequality
/// (`|u|²|ξ|⁴ ≤ ⅓|u|⁶ + ⅔|ξ|⁶`) together with `t² , t⁴ ≤ 1 + t⁶` gives `C = 5`, `p = q = 6`.
pub struct Coupled;

impl Coupled {
    pub fn weight(x: &[f64]) -> f64 {
        1.0 + 0.5 * (2.0 * PI * x[0]).cos()
    }
}

impl EnergyDensity for Coupled {
    fn label(&self) -> String {
        "coupled".into()
    }
    fn eval(&self, x: &[f64], u: &[f64], xi: &[f64]) -> f64 {
        let s = norm2(xi) - 1.0;
        (1.0 + norm2(u)) * s * s + Self::weight(x) * norm2(xi)
    }
    fn grad_xi(&self, x: &[f64], u: &[f64], xi: &[f64], out: &mut [f64]) {
        let s = norm2(xi) - 1.0;
        let a = 4.0 * (1.0 + norm2(u)) * s + 2.0 * Self::weight(x);
        for (o, v) in out.iter_mut().zip(xi) {
            *o = a * v;
        }
    }
    fn growth(&self) -> Growth {
        Growth { c: 5.0, p: 6.0, q: 6.0 }
    }
}

/// Wraps a density with user-declared growth constants.
pub struct DeclaredGrowth<F> {
    pub inner: F,
    pub growth: Growth,
}

impl<F: EnergyDensity> EnergyDensity for DeclaredGrowth<F> {
    fn label(&self) -> String {
        self.inner.label()
    }
    fn eval(&self, x: &[f64], u: &[f64], xi: &[f64]) -> f64 {
        self.inner.eval(x, u, xi)
    }
    fn grad_xi(&self, x: &[f64], u: &[f64], xi: &[f64], out: &mut [f64]) {
        self.inner.grad_xi(x, u, xi, out)
    }
    fn growth(&self) -> Growth {
        self.growth
    }
    fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }
}

pub fn registry() -> Registry<dyn EnergyDensity> {
    let mut r: Registry<dyn EnergyDensity> = Registry::new("density");
    r.register("quad", "|ξ|²", |p| {
        expect_at_most(p, 0, "quad")?;
        Ok(Box::new(Quadratic))
    });
    r.register("dwell", "(|ξ|²-1)²", |p| {
        expect_at_most(p, 0, "dwell")?;
        Ok(Box::new(DoubleWell))
    });
    r.register("pnorm", "|ξ|^q, parameter q (default 2)", |p| {
        expect_at_most(p, 1, "pnorm")?;
        Ok(Box::new(PowerNorm::new(param(p, 0, 2.0))?))
    });
    r.register("coupled", "(1+|u|²)(|ξ|²-1)² + (1+½cos 2πx₁)|ξ|²", |p| {
        expect_at_most(p, 0, "coupled")?;
        Ok(Box::new(Coupled))
    });
    r
}

/// Deterministic `(x, u, ξ)` samples: `x` in the unit cell, `u` and `ξ` Gaussian
/// directions with magnitudes spread log-uniformly over `[1e-3, 1e3]`.
pub fn sample_triples(
    count: usize,
    dims: (usize, usize, usize),
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (n, m, d) = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vector = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> {
        let dir: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let nrm = norm(&dir).max(1e-300);
        let mag = 10f64.powf(rng.random_range(-3.0..3.0));
        dir.iter().map(|v| v * mag / nrm).collect()
    };
    (0..count)
        .map(|_| {
            let x = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let u = vector(&mut rng, m);
            let xi = vector(&mut rng, d);
            (x, u, xi)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub passed: bool,
    pub worst_ratio: f64,
    /// Sample attaining the worst ratio.
    pub witness: (Vec<f64>, Vec<f64>, Vec<f64>),
    pub negative_value: bool,
}

/// Largest `f / (C(1+|u|^p+|ξ|^q))` over sampled triples; fails above 1 or on negative values.
pub fn growth_check(f: &dyn EnergyDensity, dims: (usize, usize, usize), sample_count: usize, seed: u64) -> GrowthReport {
    let g = f.growth();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = (Vec::new(), Vec::new(), Vec::new());
    let mut negative = false;
    for (x, u, xi) in sample_triples(sample_count, dims, seed) {
        let v = f.eval(&x, &u, &xi);
        negative |= v < 0.0 || !v.is_finite();
        let ratio = v / g.bound(&u, &xi);
        if ratio > worst {
            worst = ratio;
            witness = (x, u, xi);
        }
    }
    GrowthReport {
        passed: worst <= 1.0 && !negative,
        worst_ratio: worst,
        witness,
        negative_value: negative,
    }
}

/// Largest `‖∇_ξ f - central difference‖ / (1 + ‖∇_ξ f‖)` over samples with `|ξ| ≤ 10`.
pub fn gradient_check(f: &dyn EnergyDensity, dims: (usize, usize, usize), sample_count: usize, h: f64, seed: u64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Usage(format!("difference step must be positive, got {h}")));
    }
    let d = dims.2;
    let mut worst: f64 = 0.0;
    let mut grad = vec![0.0; d];
    for (x, u, xi) in sample_triples(sample_count, dims, seed) {
        // keep the finite-difference truncation error meaningful
        let scale = (10.0 / norm(&xi)).min(1.0);
        let xi: Vec<f64> = xi.iter().map(|v| v * scale).collect();
        let u: Vec<f64> = u.iter().map(|v| v * (10.0 / norm(&u)).min(1.0)).collect();
        f.grad_xi(&x, &u, &xi, &mut grad);
        let mut err2 = 0.0;
        for j in 0..d {
            let mut plus = xi.clone();
            let mut minus = xi.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (f.eval(&x, &u, &plus) - f.eval(&x, &u, &minus)) / (2.0 * h);
            err2 += (grad[j] - fd).powi(2);
        }
        worst = worst.max(err2.sqrt() / (1.0 + norm(&grad)));
    }
    Ok(worst)
}
