//! Discrete convex envelope of a function sampled on a uniform box grid.

use crate::error::{Error, Result};

/// Uniform axis `lo, lo + h, …, hi` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    /// Node spacing; 0 for a single-point axis.
    pub fn step(&self) -> f64 {
        if self.points <= 1 {
            return 0.0;
        }
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }

    /// Index of `x` if it lies on the axis (within `1e-9` of a node).
    pub fn locate(&self, x: f64) -> Option<usize> {
        if self.points <= 1 {
            return ((x - self.lo).abs() < 1e-9).then_some(0);
        }
        let s = (x - self.lo) / self.step();
        let i = s.round();
        ((s - i).abs() < 1e-9 && i >= 0.0 && i < self.points as f64).then_some(i as usize)
    }
}

/// Samples on the tensor grid of `axes`, axis 0 fastest.
#[derive(Debug, Clone)]
pub struct GridSlice {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl GridSlice {
    pub fn sample(axes: Vec<Axis>, f: impl Fn(&[f64]) -> f64) -> Self {
        let len: usize = axes.iter().map(|a| a.points).product();
        let mut point = vec![0.0; axes.len()];
        let values = (0..len)
            .map(|idx| {
                let mut rem = idx;
                for (p, a) in point.iter_mut().zip(&axes) {
                    *p = a.value(rem % a.points);
                    rem /= a.points;
                }
                f(&point)
            })
            .collect();
        Self { axes, values }
    }

    pub fn index_of(&self, point: &[f64]) -> Option<usize> {
        let mut idx = 0;
        let mut stride = 1;
        for (a, &x) in self.axes.iter().zip(point) {
            idx += a.locate(x)? * stride;
            stride *= a.points;
        }
        Some(idx)
    }

    pub fn at(&self, point: &[f64]) -> Option<f64> {
        self.index_of(point).map(|i| self.values[i])
    }
}

/// One Legendre–Fenchel pass along `axis`: `out(.., b, ..) = max_a (b·a + src(.., a, ..))`.
fn pass(src: &[f64], shape: &[usize], axis: usize, from: &[f64], to: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut out_shape = shape.to_vec();
    out_shape[axis] = to.len();
    let stride: usize = shape[..axis].iter().product();
    let out_stride = stride;
    let outer: usize = shape[axis + 1..].iter().product();
    let mut out = vec![f64::NEG_INFINITY; out_shape.iter().product()];
    for o in 0..outer {
        for inner in 0..stride {
            let base_in = o * stride * shape[axis] + inner;
            let base_out = o * out_stride * to.len() + inner;
            for (j, &b) in to.iter().enumerate() {
                let mut best = f64::NEG_INFINITY;
                for (i, &a) in from.iter().enumerate() {
                    best = best.max(b * a + src[base_in + i * stride]);
                }
                out[base_out + j * out_stride] = best;
            }
        }
    }
    (out, out_shape)
}

/// Double discrete Legendre–Fenchel transform. Slopes per axis form a symmetric
/// grid of `2n-1` points (containing 0) spanning the largest adjacent difference
/// quotient of the data along that axis. The output never exceeds the input.
pub fn convex_biconjugate(slice: &GridSlice) -> Result<GridSlice> {
    let axes = &slice.axes;
    if axes.is_empty() || axes.iter().any(|a| a.points < 3 || !(a.hi > a.lo)) {
        return Err(Error::Usage("biconjugate needs at least 3 points per axis on a nonempty box".into()));
    }
    let len: usize = axes.iter().map(|a| a.points).product();
    if slice.values.len() != len || slice.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("biconjugate needs finite samples on every grid point".into()));
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.points).collect();
    let coords: Vec<Vec<f64>> = axes.iter().map(|a| (0..a.points).map(|i| a.value(i)).collect()).collect();
    let slopes: Vec<Vec<f64>> = axes
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let stride: usize = shape[..k].iter().product();
            let mut range: f64 = 0.0;
            for idx in 0..len {
                if (idx / stride) % a.points + 1 < a.points {
                    range = range.max((slice.values[idx + stride] - slice.values[idx]).abs() / a.step());
                }
            }
            let n = a.points as i64 - 1;
            (-n..=n).map(|j| range * j as f64 / n.max(1) as f64).collect()
        })
        .collect();

    // φ*(b) = max_a (b·a - φ(a))
    let mut cur: Vec<f64> = slice.values.iter().map(|v| -v).collect();
    let mut cur_shape = shape.clone();
    for k in 0..axes.len() {
        let (next, s) = pass(&cur, &cur_shape, k, &coords[k], &slopes[k]);
        cur = next;
        cur_shape = s;
    }
    // φ**(a) = max_b (a·b - φ*(b))
    cur.iter_mut().for_each(|v| *v = -*v);
    for k in 0..axes.len() {
        let (next, s) = pass(&cur, &cur_shape, k, &slopes[k], &coords[k]);
        cur = next;
        cur_shape = s;
    }
    let values = cur.iter().zip(&slice.values).map(|(v, f)| v.min(*f)).collect();
    Ok(GridSlice {
        axes: axes.clone(),
        values,
    })
}
