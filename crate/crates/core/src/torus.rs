//! Discrete periodic fields on the unit cell `(-½, ½)^N`.
//!
//! Grid points sit at `x = -½ + i/G` per axis, linear index `Σ_a i_a G^a`
//! (axis 0 fastest). Spectral coefficients use the normalisation
//! `ĉ(k) = G^{-N} Σ_i v(i) e^{-2πi k·i/G}`, so the inverse transform is a plain sum
//! and Parseval reads `‖v‖²_{L²} = Σ_k |ĉ(k)|²` with cell-averaged norms.
//!
//! Frequencies run over `{-G/2, …, G/2-1}^N`. The index `-G/2` is its own
//! Hermitian partner; such modes are treated as cosines (see
//! [`TorusGrid::symbol_frequency`]).

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    freqs: Arc<Vec<i64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusGrid(N={}, G={})", self.dim, self.size)
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.size == other.size
    }
}

impl TorusGrid {
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if size < 4 || size % 2 != 0 {
            return Err(Error::Config(format!("grid size must be even and at least 4, got {size}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let len = size.pow(dim as u32);
        let mut freqs = Vec::with_capacity(len * dim);
        for idx in 0..len {
            let mut rem = idx;
            for _ in 0..dim {
                let i = rem % size;
                rem /= size;
                freqs.push(if i < size / 2 { i as i64 } else { i as i64 - size as i64 });
            }
        }
        Ok(Self {
            dim,
            size,
            forward,
            inverse,
            freqs: Arc::new(freqs),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of grid points `G^N`.
    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        (0..self.dim)
            .map(|_| {
                let i = rem % self.size;
                rem /= self.size;
                i
            })
            .collect()
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().rev().fold(0, |acc, &i| acc * self.size + (i % self.size))
    }

    pub fn position(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .into_iter()
            .map(|i| -0.5 + i as f64 / self.size as f64)
            .collect()
    }

    /// Integer frequency of a spectral index, components in `[-G/2, G/2)`.
    pub fn frequency(&self, idx: usize) -> &[i64] {
        &self.freqs[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn frequency_norm(&self, idx: usize) -> f64 {
        self.frequency(idx).iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt()
    }

    /// Spectral index of the frequency `-k` (mod G).
    pub fn partner(&self, idx: usize) -> usize {
        let multi: Vec<usize> = self
            .frequency(idx)
            .iter()
            .map(|&k| ((-k).rem_euclid(self.size as i64)) as usize)
            .collect();
        self.index_of(&multi)
    }

    /// Frequency vector used when a symbol `σ(k)` is evaluated at this mode.
    ///
    /// * `None` for the mean mode.
    /// * Self-partnered modes (every component `0` or `-G/2`) use `+G/2` in place
    ///   of `-G/2`.
    /// * Otherwise Nyquist components are dropped: a sampled `cos(πG y_a)` has zero
    ///   derivative at the grid points, and dropping them keeps `σ(k)` and
    ///   `σ(partner)` consistent so real fields stay real.
    pub fn symbol_frequency(&self, idx: usize) -> Option<Vec<f64>> {
        let k = self.frequency(idx);
        let nyq = -(self.size as i64) / 2;
        if k.iter().all(|&c| c == 0) {
            return None;
        }
        let nyquist_count = k.iter().filter(|&&c| c == nyq).count();
        if nyquist_count == 0 {
            return Some(k.iter().map(|&c| c as f64).collect());
        }
        let self_partner = k.iter().all(|&c| c == 0 || c == nyq);
        if self_partner {
            Some(k.iter().map(|&c| if c == nyq { -(c as f64) } else { 0.0 }).collect())
        } else {
            Some(k.iter().map(|&c| if c == nyq { 0.0 } else { c as f64 }).collect())
        }
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.size;
        let len = self.len();
        debug_assert_eq!(data.len(), len);
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut lines = vec![C64::new(0.0, 0.0); len];
        for axis in 0..self.dim {
            let stride = n.pow(axis as u32);
            if axis == 0 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            // gather lines along `axis` into contiguous chunks
            let mut line = 0;
            for base in 0..len {
                if (base / stride) % n != 0 {
                    continue;
                }
                for j in 0..n {
                    lines[line * n + j] = data[base + j * stride];
                }
                line += 1;
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for base in 0..len {
                if (base / stride) % n != 0 {
                    continue;
                }
                for j in 0..n {
                    data[base + j * stride] = lines[line * n + j];
                }
                line += 1;
            }
        }
    }
}

/// Sampled `R^d`-valued periodic field; `values[idx * d + c]`.
#[derive(Clone, Debug)]
pub struct PeriodicField {
    grid: TorusGrid,
    components: usize,
    values: Vec<f64>,
}

/// Spectral coefficients of a field, component-major: `coeffs[c * G^N + idx]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    components: usize,
    coeffs: Vec<C64>,
}

impl PeriodicField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        Self {
            grid: grid.clone(),
            components,
            values: vec![0.0; grid.len() * components],
        }
    }

    pub fn from_values(grid: &TorusGrid, components: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * components {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len() * components,
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            components,
            values,
        })
    }

    /// Samples `f(x, out)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, components: usize, f: impl Fn(&[f64], &mut [f64])) -> Self {
        let mut field = Self::zeros(grid, components);
        for idx in 0..grid.len() {
            let x = grid.position(idx);
            f(&x, &mut field.values[idx * components..(idx + 1) * components]);
        }
        field
    }

    pub fn constant(grid: &TorusGrid, value: &[f64]) -> Self {
        Self::from_fn(grid, value.len(), |_, out| out.copy_from_slice(value))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.components..(idx + 1) * self.components]
    }

    pub fn at_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.components..(idx + 1) * self.components]
    }

    pub fn ensure_compatible(&self, other: &PeriodicField) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::GridMismatch(format!(
                "{:?} with {} components vs {:?} with {}",
                self.grid, self.components, other.grid, other.components
            )));
        }
        Ok(())
    }

    pub fn magnitude(&self, idx: usize) -> f64 {
        self.at(idx).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.components];
        for idx in 0..self.grid.len() {
            for (acc, v) in m.iter_mut().zip(self.at(idx)) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.grid.len() as f64);
        m
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.magnitude(i)).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &PeriodicField) -> Result<Self> {
        self.ensure_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &PeriodicField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &PeriodicField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add_constant(&self, c: &[f64]) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.len() {
            for (v, ci) in out.at_mut(idx).iter_mut().zip(c) {
                *v += ci;
            }
        }
        out
    }

    /// Cell-averaged inner product.
    pub fn dot(&self, other: &PeriodicField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    /// Cyclic shift by whole cells: `out(i) = self(i - shift)`.
    pub fn shifted(&self, shift: &[i64]) -> Self {
        let g = self.grid.size as i64;
        let mut out = Self::zeros(&self.grid, self.components);
        for idx in 0..self.grid.len() {
            let target: Vec<usize> = self
                .grid
                .multi_index(idx)
                .iter()
                .zip(shift)
                .map(|(&i, &s)| (i as i64 + s).rem_euclid(g) as usize)
                .collect();
            let t = self.grid.index_of(&target);
            out.at_mut(t).copy_from_slice(self.at(idx));
        }
        out
    }

    pub fn spectrum(&self) -> Spectrum {
        let n = self.grid.len();
        let mut coeffs = vec![C64::new(0.0, 0.0); n * self.components];
        let scale = 1.0 / n as f64;
        for c in 0..self.components {
            let chunk = &mut coeffs[c * n..(c + 1) * n];
            for (idx, z) in chunk.iter_mut().enumerate() {
                *z = C64::new(self.values[idx * self.components + c], 0.0);
            }
            self.grid.transform(chunk, false);
            chunk.iter_mut().for_each(|z| *z *= scale);
        }
        Spectrum {
            grid: self.grid.clone(),
            components: self.components,
            coeffs,
        }
    }

    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        check_exponent(q)?;
        let sum: f64 = (0..self.grid.len()).map(|i| self.magnitude(i).powf(q)).sum();
        Ok((sum * self.grid.cell_volume()).powf(1.0 / q))
    }

    /// `L^q` norm after the Bessel multiplier `(1 + 4π²|k|²)^{-1/2}`.
    pub fn wm1q_norm(&self, q: f64) -> Result<f64> {
        check_exponent(q)?;
        let mut spec = self.spectrum();
        spec.apply_scalar_multiplier(|k| (1.0 + 4.0 * PI * PI * k * k).powf(-0.5));
        spec.to_field().lq_norm(q)
    }

    pub fn zero_mean(&self) -> Self {
        let mut spec = self.spectrum();
        for c in 0..self.components {
            spec.coeffs[c * self.grid.len()] = C64::new(0.0, 0.0);
        }
        spec.to_field()
    }

    /// `Σ_{cells: |v| > M} |v|^q · cellvol`.
    pub fn tail_function(&self, q: f64, level: f64) -> Result<f64> {
        check_exponent(q)?;
        if level.is_nan() || level < 0.0 {
            return Err(Error::Usage(format!("tail level must be nonnegative, got {level}")));
        }
        let sum = (0..self.grid.len())
            .map(|i| self.magnitude(i))
            .filter(|&m| m > level)
            .fold(0.0, |acc, m| acc + m.powf(q));
        Ok(sum * self.grid.cell_volume())
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let mut spec = self.spectrum();
        let n = self.grid.len();
        for idx in 0..n {
            let factor = match self.grid.symbol_frequency(idx) {
                Some(k) => C64::new(0.0, 2.0 * PI * k[axis]),
                None => C64::new(0.0, 0.0),
            };
            for c in 0..self.components {
                spec.coeffs[c * n + idx] *= factor;
            }
        }
        spec.to_field()
    }

    /// Trigonometric interpolation onto a finer grid (zero padding).
    pub fn upsample(&self, fine: &TorusGrid) -> Result<Self> {
        if fine.dim != self.grid.dim || fine.size < self.grid.size {
            return Err(Error::GridMismatch(format!("cannot upsample {:?} to {:?}", self.grid, fine)));
        }
        let spec = self.spectrum();
        let n = self.grid.len();
        let nf = fine.len();
        let half = self.grid.size as i64 / 2;
        let mut out = vec![C64::new(0.0, 0.0); nf * self.components];
        for idx in 0..n {
            let k = self.grid.frequency(idx);
            let nyq: Vec<usize> = (0..k.len()).filter(|&a| k[a] == -half).collect();
            let copies = 1usize << nyq.len();
            for mask in 0..copies {
                let mut target = k.to_vec();
                for (bit, &a) in nyq.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        target[a] = half;
                    }
                }
                let multi: Vec<usize> = target
                    .iter()
                    .map(|&t| t.rem_euclid(fine.size as i64) as usize)
                    .collect();
                let fidx = fine.index_of(&multi);
                for c in 0..self.components {
                    out[c * nf + fidx] += spec.coeffs[c * n + idx] / copies as f64;
                }
            }
        }
        Ok(Spectrum {
            grid: fine.clone(),
            components: self.components,
            coeffs: out,
        }
        .to_field())
    }

    /// Writes a CSV dump with a `# N=.. G=.. d=..` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# aqc-field")?;
        writeln!(w, "# N={} G={} d={}", self.grid.dim, self.grid.size, self.components)?;
        let mut header: Vec<String> = (1..=self.grid.dim).map(|a| format!("x{a}")).collect();
        header.extend((1..=self.components).map(|c| format!("v{c}")));
        writeln!(w, "{}", header.join(","))?;
        for idx in 0..self.grid.len() {
            let mut row: Vec<String> = self.grid.position(idx).iter().map(|x| format!("{x}")).collect();
            row.extend(self.at(idx).iter().map(|v| format!("{v:e}")));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut values = Vec::new();
        let mut saw_columns = false;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if rest.contains("N=") {
                    dims = Some(parse_header(rest)?);
                }
                continue;
            }
            let (n, _, d) = dims.ok_or_else(|| Error::Config("field CSV lacks `# N= G= d=` header".into()))?;
            if !saw_columns {
                saw_columns = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != n + d {
                return Err(Error::Config(format!("field CSV row has {} columns, expected {}", cells.len(), n + d)));
            }
            for c in &cells[n..] {
                values.push(
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad number `{c}` in field CSV")))?,
                );
            }
        }
        let (n, g, d) = dims.ok_or_else(|| Error::Config("field CSV lacks header".into()))?;
        Self::from_values(&TorusGrid::new(n, g)?, d, values)
    }

    /// Binary dump: `b"AQCF"`, then `u32` version, N, G, d (little endian), then `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"AQCF")?;
        for v in [1u32, self.grid.dim as u32, self.grid.size as u32, self.components as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"AQCF" {
            return Err(Error::Config("not an aqc binary field".into()));
        }
        let mut header = [0u32; 4];
        for h in header.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *h = u32::from_le_bytes(b);
        }
        if header[0] != 1 {
            return Err(Error::Config(format!("unsupported field version {}", header[0])));
        }
        let grid = TorusGrid::new(header[1] as usize, header[2] as usize)?;
        let d = header[3] as usize;
        let mut values = vec![0.0; grid.len() * d];
        for v in values.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        Self::from_values(&grid, d, values)
    }
}

fn parse_header(text: &str) -> Result<(usize, usize, usize)> {
    let mut n = None;
    let mut g = None;
    let mut d = None;
    for tok in text.split_whitespace() {
        let Some((k, v)) = tok.split_once('=') else { continue };
        let v: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("bad header value `{tok}`")))?;
        match k {
            "N" => n = Some(v),
            "G" => g = Some(v),
            "d" => d = Some(v),
            _ => {}
        }
    }
    match (n, g, d) {
        (Some(n), Some(g), Some(d)) => Ok((n, g, d)),
        _ => Err(Error::Config(format!("incomplete field header `{text}`"))),
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Usage(format!("exponent must lie in (1, ∞), got {q}")));
    }
    Ok(())
}

impl Spectrum {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        Self {
            grid: grid.clone(),
            components,
            coeffs: vec![C64::new(0.0, 0.0); grid.len() * components],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeff(&self, component: usize, idx: usize) -> C64 {
        self.coeffs[component * self.grid.len() + idx]
    }

    pub fn set_coeff(&mut self, component: usize, idx: usize, value: C64) {
        let n = self.grid.len();
        self.coeffs[component * n + idx] = value;
    }

    /// All components at one mode.
    pub fn mode(&self, idx: usize) -> Vec<C64> {
        (0..self.components).map(|c| self.coeff(c, idx)).collect()
    }

    pub fn set_mode(&mut self, idx: usize, values: &[C64]) {
        for (c, v) in values.iter().enumerate() {
            self.set_coeff(c, idx, *v);
        }
    }

    /// Multiplies every mode by `m(|k|)` with the true frequency magnitude.
    pub fn apply_scalar_multiplier(&mut self, m: impl Fn(f64) -> f64) {
        let n = self.grid.len();
        for idx in 0..n {
            let factor = m(self.grid.frequency_norm(idx));
            for c in 0..self.components {
                self.coeffs[c * n + idx] *= factor;
            }
        }
    }

    /// `Σ_k |ĉ(k)|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Inverse transform; the imaginary part is discarded.
    pub fn to_field(&self) -> PeriodicField {
        let n = self.grid.len();
        let mut values = vec![0.0; n * self.components];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for c in 0..self.components {
            buf.copy_from_slice(&self.coeffs[c * n..(c + 1) * n]);
            self.grid.transform(&mut buf, true);
            for (idx, z) in buf.iter().enumerate() {
                values[idx * self.components + c] = z.re;
            }
        }
        PeriodicField {
            grid: self.grid.clone(),
            components: self.components,
            values,
        }
    }

    /// Largest violation of `ĉ(-k) = conj(ĉ(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for idx in 0..n {
            let p = self.grid.partner(idx);
            for c in 0..self.components {
                worst = worst.max((self.coeff(c, p) - self.coeff(c, idx).conj()).norm());
            }
        }
        worst
    }
}

/// Evaluates a periodic field at arbitrary points by trigonometric interpolation.
///
/// Points that coincide with grid nodes are read off directly.
pub struct Interpolator {
    field: PeriodicField,
    spectrum: Spectrum,
}

impl Interpolator {
    pub fn new(field: &PeriodicField) -> Self {
        Self {
            spectrum: field.spectrum(),
            field: field.clone(),
        }
    }

    pub fn components(&self) -> usize {
        self.field.components
    }

    /// Writes the interpolated value at `y` (any real point, taken mod 1) into `out`.
    pub fn eval(&self, y: &[f64], out: &mut [f64]) {
        let grid = &self.field.grid;
        let g = grid.size as f64;
        let t: Vec<f64> = y.iter().map(|&v| (v + 0.5).rem_euclid(1.0) * g).collect();
        let rounded: Vec<f64> = t.iter().map(|v| v.round()).collect();
        if t.iter().zip(&rounded).all(|(a, b)| (a - b).abs() < 1e-9) {
            let multi: Vec<usize> = rounded.iter().map(|&r| (r as usize) % grid.size).collect();
            out.copy_from_slice(self.field.at(grid.index_of(&multi)));
            return;
        }
        let n = grid.len();
        // per-axis phase tables
        let phases: Vec<Vec<C64>> = t
            .iter()
            .map(|&ta| {
                (0..grid.size)
                    .map(|i| {
                        if i == grid.size / 2 {
                            // Nyquist mode split evenly between ±G/2
                            return C64::new((PI * ta).cos(), 0.0);
                        }
                        let k = if i < grid.size / 2 { i as f64 } else { i as f64 - g };
                        C64::from_polar(1.0, 2.0 * PI * k * ta / g)
                    })
                    .collect()
            })
            .collect();
        out.iter_mut().for_each(|o| *o = 0.0);
        for idx in 0..n {
            let multi = grid.multi_index(idx);
            let mut e = C64::new(1.0, 0.0);
            for (a, &i) in multi.iter().enumerate() {
                e *= phases[a][i];
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += (self.spectrum.coeff(c, idx) * e).re;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2(g: usize) -> TorusGrid {
        TorusGrid::new(2, g).unwrap()
    }

    fn random_field(grid: &TorusGrid, d: usize, seed: u64) -> PeriodicField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len() * d).map(|_| rng.random::<f64>() - 0.5).collect();
        PeriodicField::from_values(grid, d, values).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(2, 6).is_ok());
        assert!(TorusGrid::new(2, 5).is_err());
        assert!(TorusGrid::new(2, 2).is_err());
        assert!(TorusGrid::new(4, 8).is_err());
        let g = grid2(8);
        assert_eq!(g.len(), 64);
        assert_eq!(g.frequency(g.index_of(&[7, 4])), &[-1, -4]);
        assert_eq!(g.position(g.index_of(&[4, 0])), vec![0.0, -0.5]);
    }

    #[test]
    fn symbol_frequency_conventions() {
        let g = grid2(8);
        assert_eq!(g.symbol_frequency(0), None);
        assert_eq!(g.symbol_frequency(g.index_of(&[4, 0])), Some(vec![4.0, 0.0]));
        assert_eq!(g.symbol_frequency(g.index_of(&[4, 4])), Some(vec![4.0, 4.0]));
        assert_eq!(g.symbol_frequency(g.index_of(&[4, 3])), Some(vec![0.0, 3.0]));
        assert_eq!(g.symbol_frequency(g.index_of(&[4, 5])), Some(vec![0.0, -3.0]));
        assert_eq!(g.symbol_frequency(g.index_of(&[1, 7])), Some(vec![1.0, -1.0]));
    }

    #[test]
    fn lq_norm_examples() {
        let g = grid2(16);
        let c = PeriodicField::constant(&g, &[3.0, 4.0]);
        for q in [1.5, 2.0, 3.0] {
            assert!((c.lq_norm(q).unwrap() - 5.0).abs() < 1e-12);
        }
        let fine = TorusGrid::new(2, 64).unwrap();
        let s = PeriodicField::from_fn(&fine, 2, |x, o| {
            o[0] = (2.0 * PI * x[0]).sin().signum();
            o[1] = 0.0;
        });
        assert!((s.lq_norm(2.0).unwrap() - 1.0).abs() <= 2.0 / 64.0);
        assert_eq!(PeriodicField::zeros(&g, 2).lq_norm(2.0).unwrap(), 0.0);
        assert!(matches!(c.lq_norm(1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn wm1_norm_examples() {
        let g = grid2(16);
        let c = PeriodicField::constant(&g, &[0.0, 2.0]);
        assert!((c.wm1q_norm(2.0).unwrap() - 2.0).abs() < 1e-12);
        let a = 1.7;
        let k = [2.0, 1.0];
        let f = PeriodicField::from_fn(&g, 1, |x, o| o[0] = a * (2.0 * PI * (k[0] * x[0] + k[1] * x[1])).cos());
        let k2 = k[0] * k[0] + k[1] * k[1];
        let expected = a / 2f64.sqrt() / (1.0 + 4.0 * PI * PI * k2).sqrt();
        assert!((f.wm1q_norm(2.0).unwrap() - expected).abs() < 1e-12);
        // decays with frequency at fixed L² norm
        let mut prev = f64::INFINITY;
        for freq in 1..8 {
            let f = PeriodicField::from_fn(&g, 1, |x, o| o[0] = (2.0 * PI * freq as f64 * x[0]).sin());
            let v = f.wm1q_norm(2.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn zero_mean_examples() {
        let g = grid2(8);
        assert!(PeriodicField::constant(&g, &[1.0, -2.0]).zero_mean().sup_norm() < 1e-14);
        let v = random_field(&g, 2, 3).zero_mean();
        let vv = v.zero_mean();
        assert!(v.sub(&vv).unwrap().sup_norm() < 1e-14);
        let shifted = v.add_constant(&[0.3, 0.7]).zero_mean();
        assert!(shifted.sub(&v).unwrap().sup_norm() < 1e-14);
        assert!(v.mean().iter().all(|m| m.abs() < 1e-14));
    }

    #[test]
    fn tail_function_examples() {
        let g = grid2(16);
        let v = random_field(&g, 2, 5);
        assert_eq!(v.tail_function(2.0, v.sup_norm() + 1.0).unwrap(), 0.0);
        let full = v.lq_norm(3.0).unwrap().powi(3);
        assert!((v.tail_function(3.0, 0.0).unwrap() - full).abs() < 1e-12);
        assert!(v.tail_function(2.0, -1.0).is_err());
    }

    #[test]
    fn concentration_bump_tail_stays_bounded_away_from_zero() {
        // v_n = n^{N/q} 1_{B(0,1/n)}: tail at M=1 equals the full q-th power for n ≥ 2
        let g = TorusGrid::new(2, 128).unwrap();
        let q = 2.0;
        for n in [4.0, 8.0, 16.0] {
            let v = PeriodicField::from_fn(&g, 1, |x, o| {
                o[0] = if x[0].hypot(x[1]) < 1.0 / n { n.powf(2.0 / q) } else { 0.0 };
            });
            let cells = (0..g.len()).filter(|&i| v.at(i)[0] > 0.0).count() as f64;
            let exact = cells * n.powf(2.0) / g.len() as f64;
            let tail = v.tail_function(q, 1.0).unwrap();
            assert!((tail - exact).abs() < 1e-12);
            assert!(tail > 0.5 * PI, "{tail}");
        }
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let g = grid2(16);
        let f = PeriodicField::from_fn(&g, 1, |x, o| o[0] = (2.0 * PI * (2.0 * x[0] - x[1])).sin());
        let d0 = f.derivative(0);
        let exact = PeriodicField::from_fn(&g, 1, |x, o| o[0] = 4.0 * PI * (2.0 * PI * (2.0 * x[0] - x[1])).cos());
        assert!(d0.sub(&exact).unwrap().sup_norm() < 1e-11);
    }

    #[test]
    fn upsample_is_exact_on_nodes_and_preserves_nyquist_cosines() {
        let g = grid2(8);
        let f = random_field(&g, 2, 11);
        let fine = TorusGrid::new(2, 16).unwrap();
        let up = f.upsample(&fine).unwrap();
        for idx in 0..g.len() {
            let m: Vec<usize> = g.multi_index(idx).iter().map(|i| 2 * i).collect();
            let fi = fine.index_of(&m);
            for c in 0..2 {
                assert!((up.at(fi)[c] - f.at(idx)[c]).abs() < 1e-12);
            }
        }
        let interp = Interpolator::new(&f);
        let mut out = [0.0; 2];
        for idx in [3usize, 17, 250] {
            interp.eval(&fine.position(idx), &mut out);
            for c in 0..2 {
                assert!((out[c] - up.at(idx)[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn field_io_roundtrip() {
        let g = grid2(8);
        let f = random_field(&g, 2, 21);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = PeriodicField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let back = PeriodicField::read_csv(csv.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(PeriodicField::read_binary(&b"XXXX"[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_and_roundtrip(seed in 0u64..10_000, g in prop::sample::select(vec![4usize, 8, 16])) {
            let grid = grid2(g);
            let f = random_field(&grid, 2, seed);
            let spec = f.spectrum();
            let l2 = f.lq_norm(2.0).unwrap().powi(2);
            prop_assert!((spec.energy() - l2).abs() <= 1e-10 * l2.max(1e-30));
            prop_assert!(spec.hermitian_defect() < 1e-14);
            let back = spec.to_field();
            let err = back.sub(&f).unwrap().sup_norm();
            prop_assert!(err <= 1e-12 * f.sup_norm().max(1e-30));
        }

        #[test]
        fn wm1_never_exceeds_lq(seed in 0u64..10_000, q in prop::sample::select(vec![1.5f64, 2.0, 3.0])) {
            let f = random_field(&grid2(8), 2, seed);
            prop_assert!(f.wm1q_norm(q).unwrap() <= f.lq_norm(q).unwrap() + 1e-12);
        }

        #[test]
        fn tail_is_nonincreasing(seed in 0u64..10_000, m1 in 0.0f64..1.0, dm in 0.0f64..1.0) {
            let f = random_field(&grid2(8), 2, seed);
            prop_assert!(f.tail_function(2.0, m1 + dm).unwrap() <= f.tail_function(2.0, m1).unwrap());
        }
    }
}
