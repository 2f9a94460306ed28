//! The cell problem `inf { ∫_Q f(x0, u0, ξ + w(y)) dy : w mean-zero, A(x0)-free }`
//! on a ladder of torus grids, with laminate and biconjugate oracles.

pub mod biconjugate;
pub mod laminate;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::afree::AFreeTestSpace;
use crate::densities::EnergyDensity;
use crate::error::{Error, Result};
use crate::symbols::{CoefficientField, FrozenSymbol};
use crate::torus::{PeriodicField, TorusGrid};

pub use biconjugate::{convex_biconjugate, Axis, GridSlice};
pub use laminate::{laminate_upper_bound, lattice_directions, seed_field, LaminateBound, LaminateSeed};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub ladder: Vec<usize>,
    pub random_starts: usize,
    /// L² norm of each random start after projection.
    pub random_amplitude: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the energy by less than this fraction.
    pub relative_tolerance: f64,
    pub armijo_slope: f64,
    pub backtrack: f64,
    /// Laminate amplitudes are searched on `[-T, T]`.
    pub laminate_amplitude: f64,
    pub laminate_points: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            ladder: vec![8, 16, 32],
            random_starts: 4,
            random_amplitude: 0.5,
            max_iterations: 2000,
            relative_tolerance: 1e-8,
            armijo_slope: 1e-4,
            backtrack: 0.5,
            laminate_amplitude: 4.0,
            laminate_points: 41,
            seed: 1,
        }
    }
}

impl SolverOptions {
    /// Stable text form of every option, used in cache keys and report headers.
    pub fn fingerprint(&self) -> String {
        let ladder: Vec<String> = self.ladder.iter().map(|g| g.to_string()).collect();
        format!(
            "ladder={} starts={} amp={:e} iters={} tol={:e} armijo={:e} backtrack={:e} lam_t={:e} lam_pts={} seed={}",
            ladder.join("/"),
            self.random_starts,
            self.random_amplitude,
            self.max_iterations,
            self.relative_tolerance,
            self.armijo_slope,
            self.backtrack,
            self.laminate_amplitude,
            self.laminate_points,
            self.seed
        )
    }

    fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Config("solver ladder must contain at least one grid size".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config(format!("backtrack factor must lie in (0, 1), got {}", self.backtrack)));
        }
        if !(self.laminate_amplitude > 0.0) || !(self.random_amplitude >= 0.0) {
            return Err(Error::Config("amplitudes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct EnvelopeQuery {
    pub density: Arc<dyn EnergyDensity>,
    pub frozen: FrozenSymbol,
    pub u0: Vec<f64>,
    pub xi: Vec<f64>,
    pub options: SolverOptions,
}

impl EnvelopeQuery {
    pub fn new(
        density: Arc<dyn EnergyDensity>,
        coeffs: &dyn CoefficientField,
        x0: &[f64],
        u0: &[f64],
        xi: &[f64],
        options: SolverOptions,
    ) -> Result<Self> {
        let frozen = FrozenSymbol::new(coeffs, x0)?;
        if xi.len() != frozen.dims().field {
            return Err(Error::Config(format!(
                "ξ has {} components, operator `{}` acts on {}",
                xi.len(),
                coeffs.label(),
                frozen.dims().field
            )));
        }
        if xi.iter().chain(u0).any(|v| !v.is_finite()) {
            return Err(Error::Usage("ξ and u0 must be finite".into()));
        }
        options.validate()?;
        Ok(Self {
            density,
            frozen,
            u0: u0.to_vec(),
            xi: xi.to_vec(),
            options,
        })
    }

    pub fn x0(&self) -> &[f64] {
        &self.frozen.x0
    }

    /// `f(x0, u0, v)`.
    pub fn density_at(&self, v: &[f64]) -> f64 {
        self.density.eval(&self.frozen.x0, &self.u0, v)
    }

    pub fn test_space(&self, grid_size: usize) -> Result<AFreeTestSpace> {
        let grid = TorusGrid::new(self.frozen.dims().space, grid_size)?;
        AFreeTestSpace::from_frozen(self.frozen.clone(), &grid)
    }
}

/// Cell average of `f(x0, u0, ξ + w(y))`.
pub fn cell_energy(query: &EnvelopeQuery, w: &PeriodicField) -> f64 {
    let mut point = vec![0.0; query.xi.len()];
    let n = w.grid().len();
    let mut sum = 0.0;
    for idx in 0..n {
        for ((p, x), v) in point.iter_mut().zip(&query.xi).zip(w.at(idx)) {
            *p = x + v;
        }
        sum += query.density_at(&point);
    }
    sum / n as f64
}

fn energy_gradient(query: &EnvelopeQuery, w: &PeriodicField) -> PeriodicField {
    let mut point = vec![0.0; query.xi.len()];
    let mut g = PeriodicField::zeros(w.grid(), w.components());
    for idx in 0..w.grid().len() {
        for ((p, x), v) in point.iter_mut().zip(&query.xi).zip(w.at(idx)) {
            *p = x + v;
        }
        query
            .density
            .grad_xi(&query.frozen.x0, &query.u0, &point, g.at_mut(idx));
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartKind {
    Zero,
    Laminate(usize),
    Random(usize),
    Warm,
}

impl std::fmt::Display for StartKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StartKind::Zero => write!(f, "zero"),
            StartKind::Laminate(i) => write!(f, "laminate{i}"),
            StartKind::Random(i) => write!(f, "random{i}"),
            StartKind::Warm => write!(f, "warm"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StartRecord {
    pub grid_size: usize,
    pub kind: StartKind,
    pub initial_value: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub value: f64,
    pub minimizer: PeriodicField,
    /// `f(x0, u0, ξ)`, the energy of `w = 0`.
    pub unrelaxed: f64,
    pub starts: Vec<StartRecord>,
    /// Best value at each rung of the ladder.
    pub ladder: Vec<(usize, f64)>,
    pub laminate: LaminateBound,
    /// Whether the start attaining `value` met the stopping rule before the iteration cap.
    pub converged: bool,
}

impl EnvelopeResult {
    pub fn upper_oracle(&self) -> f64 {
        self.unrelaxed.min(self.laminate.value)
    }
}

struct Descent {
    field: PeriodicField,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Projected gradient descent with Armijo backtracking from an A-free start.
fn descend(query: &EnvelopeQuery, space: &AFreeTestSpace, start: PeriodicField) -> Result<Descent> {
    let opts = &query.options;
    let mut w = start;
    let mut value = cell_energy(query, &w);
    if !value.is_finite() {
        return Err(Error::Diverged(format!("cell energy is not finite at a start (ξ = {:?})", query.xi)));
    }
    let mut step = 1.0;
    for it in 0..opts.max_iterations {
        let grad = energy_gradient(query, &w);
        let dir = space.project(&grad)?;
        let slope = dir.dot(&dir);
        if !slope.is_finite() {
            return Err(Error::Diverged(format!("non-finite gradient (ξ = {:?})", query.xi)));
        }
        if slope <= 1e-20 {
            return Ok(Descent { field: w, value, iterations: it, converged: true });
        }
        let mut accepted = None;
        while step > 1e-16 {
            let trial = w.axpy(-step, &dir)?;
            let e = cell_energy(query, &trial);
            if e.is_finite() && e <= value - opts.armijo_slope * step * slope {
                accepted = Some((trial, e));
                break;
            }
            step *= opts.backtrack;
        }
        let Some((trial, e)) = accepted else {
            return Ok(Descent { field: w, value, iterations: it, converged: true });
        };
        let decrease = value - e;
        w = trial;
        value = e;
        step /= opts.backtrack;
        if decrease <= opts.relative_tolerance * value.abs().max(1e-12) {
            return Ok(Descent { field: w, value, iterations: it + 1, converged: true });
        }
    }
    Ok(Descent {
        field: w,
        value,
        iterations: opts.max_iterations,
        converged: false,
    })
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finaliser over the combined words
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A-free random field with the requested L² norm; zero if the space is trivial.
pub fn random_afree_field(space: &AFreeTestSpace, amplitude: f64, seed: u64) -> Result<PeriodicField> {
    let grid = space.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len() * space.components())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let z = space.project(&PeriodicField::from_values(grid, space.components(), values)?)?;
    let n = z.lq_norm(2.0)?;
    Ok(if n > 0.0 { z.scaled(amplitude / n) } else { z })
}

/// Whether `candidate` should replace `incumbent`.
fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - 1e-12 * incumbent.abs().max(1.0)
}

/// Minimizes the cell energy over every rung of the ladder and every start.
pub fn minimize_cell(query: &EnvelopeQuery) -> Result<EnvelopeResult> {
    let opts = &query.options;
    let unrelaxed = query.density_at(&query.xi);
    if !unrelaxed.is_finite() {
        return Err(Error::Diverged(format!("f is not finite at ξ = {:?}", query.xi)));
    }
    let mut starts = Vec::new();
    let mut ladder = Vec::new();
    let mut best: Option<(f64, PeriodicField, bool)> = None;
    let mut warm: Option<PeriodicField> = None;
    let mut laminate = None;
    for (rung, &g) in opts.ladder.iter().enumerate() {
        let space = query.test_space(g)?;
        let grid = space.grid().clone();
        let bound = laminate_upper_bound(query, g)?;

        let mut inits: Vec<(StartKind, PeriodicField)> = vec![(StartKind::Zero, PeriodicField::zeros(&grid, space.components()))];
        let mut seeds: Vec<&LaminateSeed> = bound.candidates.iter().filter(|c| c.value < unrelaxed).collect();
        seeds.sort_by(|a, b| a.value.total_cmp(&b.value));
        for (i, s) in seeds.into_iter().enumerate() {
            inits.push((StartKind::Laminate(i), space.project(&seed_field(&grid, s))?));
        }
        for i in 0..opts.random_starts {
            let seed = mix(opts.seed, i as u64 + 1, g as u64);
            inits.push((StartKind::Random(i), random_afree_field(&space, opts.random_amplitude, seed)?));
        }
        if let Some(prev) = warm.take() {
            inits.push((StartKind::Warm, space.project(&prev.upsample(&grid)?)?));
        }

        let outcomes: Vec<Result<(StartKind, f64, Descent)>> = inits
            .into_par_iter()
            .map(|(kind, init)| {
                let initial = cell_energy(query, &init);
                descend(query, &space, init).map(|d| (kind, initial, d))
            })
            .collect();

        let mut rung_best: Option<(f64, PeriodicField, bool)> = None;
        for outcome in outcomes {
            let (kind, initial, d) = outcome?;
            starts.push(StartRecord {
                grid_size: g,
                kind,
                initial_value: initial,
                value: d.value,
                iterations: d.iterations,
                converged: d.converged,
            });
            if rung_best.as_ref().is_none_or(|(v, _, _)| improves(d.value, *v)) {
                rung_best = Some((d.value, d.field, d.converged));
            }
        }
        let (rv, rf, rc) = rung_best.expect("zero start always present");
        ladder.push((g, rv));
        if best.as_ref().is_none_or(|(v, _, _)| improves(rv, *v)) {
            best = Some((rv, rf.clone(), rc));
        }
        if rung + 1 < opts.ladder.len() {
            warm = Some(rf);
        }
        laminate = Some(bound);
    }
    let (value, minimizer, converged) = best.expect("ladder is nonempty");
    Ok(EnvelopeResult {
        value,
        minimizer,
        unrelaxed,
        starts,
        ladder,
        laminate: laminate.expect("ladder is nonempty"),
        converged,
    })
}

/// Samples `f(x0, u0, ·)` on a box grid, the input of [`convex_biconjugate`].
pub fn sample_density_slice(density: &dyn EnergyDensity, x0: &[f64], u0: &[f64], axes: Vec<Axis>) -> GridSlice {
    GridSlice::sample(axes, |xi| density.eval(x0, u0, xi))
}
