//! Frequency cutoff `χ` and the catalog of spatial cutoffs `η`.

use crate::registry::{expect_at_most, param, Registry};

/// Quintic smoothstep `6u⁵ - 15u⁴ + 10u³` clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

/// `χ(t)`: 0 for `t ≤ 1`, 1 for `t ≥ 2`, quintic in between.
pub fn chi(t: f64) -> f64 {
    smoothstep(t - 1.0)
}

pub trait SpatialCutoff: Send + Sync {
    fn label(&self) -> String;
    fn eval(&self, x: &[f64]) -> f64;
    /// Whether `η(x) = 1` (the set on which interior estimates are measured).
    fn is_one(&self, x: &[f64]) -> bool {
        self.eval(x) == 1.0
    }
}

pub struct One;

impl SpatialCutoff for One {
    fn label(&self) -> String {
        "one".into()
    }
    fn eval(&self, _: &[f64]) -> f64 {
        1.0
    }
}

/// Radial bump: 1 for `|x| ≤ inner`, 0 for `|x| ≥ outer`, quintic (C²) in between.
pub struct RadialBump {
    pub inner: f64,
    pub outer: f64,
}

impl SpatialCutoff for RadialBump {
    fn label(&self) -> String {
        if self.inner == 0.25 && self.outer == 0.45 {
            "bump".into()
        } else {
            format!("bump({},{})", self.inner, self.outer)
        }
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        1.0 - smoothstep((r - self.inner) / (self.outer - self.inner))
    }
}

pub fn registry() -> Registry<dyn SpatialCutoff> {
    let mut r: Registry<dyn SpatialCutoff> = Registry::new("cutoff");
    r.register("one", "η ≡ 1", |p| {
        expect_at_most(p, 0, "one")?;
        Ok(Box::new(One))
    });
    r.register("bump", "radial bump, 1 inside radius a (0.25), 0 outside b (0.45)", |p| {
        expect_at_most(p, 2, "bump")?;
        let (inner, outer) = (param(p, 0, 0.25), param(p, 1, 0.45));
        if !(0.0 <= inner && inner < outer && outer <= 0.5) {
            return Err(crate::Error::Config(format!(
                "bump radii must satisfy 0 ≤ a < b ≤ 0.5, got ({inner}, {outer})"
            )));
        }
        Ok(Box::new(RadialBump { inner, outer }))
    });
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;

    fn build(label: &str) -> Result<Box<dyn SpatialCutoff>> {
        registry().build(label)
    }

    #[test]
    fn chi_profile() {
        assert_eq!(chi(0.0), 0.0);
        assert_eq!(chi(1.0), 0.0);
        assert_eq!(chi(2.0), 1.0);
        assert_eq!(chi(7.0), 1.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = chi(1.0 + i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
        // first and second derivatives vanish at the seams
        let h = 1e-4;
        for t in [1.0, 2.0] {
            let d1 = (chi(t + h) - chi(t - h)) / (2.0 * h);
            let d2 = (chi(t + h) - 2.0 * chi(t) + chi(t - h)) / (h * h);
            assert!(d1.abs() < 1e-6 && d2.abs() < 1e-2, "{t}: {d1} {d2}");
        }
    }

    #[test]
    fn bump_profile() {
        let b = build("bump").unwrap();
        assert_eq!(b.eval(&[0.1, 0.2]), 1.0);
        assert!(b.is_one(&[0.25, 0.0]));
        assert_eq!(b.eval(&[0.45, 0.0]), 0.0);
        assert_eq!(b.eval(&[0.5, 0.5]), 0.0);
        let mid = b.eval(&[0.35, 0.0]);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(build("bump(0.3,0.2)").is_err());
        assert_eq!(build("one").unwrap().eval(&[0.4, -0.5]), 1.0);
    }
}
