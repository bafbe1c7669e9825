//! Truncated double-well potential.
//!
//! Inside `[-T, T]` the potential is the quartic `(φ² - 1)² / 4`; outside it
//! continues as the quadratic that matches value and slope at `±T`, so that
//! `f' = F''` stays bounded. With `T = 2` the outer branch is
//! `11/2 (φ - 2)² + 6 (φ - 2) + 9/4` and `sup |f'| = 11`.
//!
//! [`BlendMode::Blended`] replaces the kink in `f'` at `±T` by a quintic
//! Hermite patch on `[T - δ, T + δ]`, which makes `F` twice continuously
//! differentiable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    #[default]
    Piecewise,
    Blended,
}

/// Quintic in `(a - x0)` matching value, slope and curvature at both ends.
#[derive(Debug, Clone, Copy)]
struct HermitePatch {
    x0: f64,
    c: [f64; 6],
}

impl HermitePatch {
    fn new(x0: f64, x1: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let h = x1 - x0;
        let (c0, c1, c2) = (left[0], left[1], 0.5 * left[2]);
        let r0 = right[0] - (c0 + c1 * h + c2 * h * h);
        let r1 = (right[1] - (c1 + 2.0 * c2 * h)) * h;
        let r2 = (right[2] - 2.0 * c2) * h * h;
        let a3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let a4 = -15.0 * r0 + 7.0 * r1 - r2;
        let a5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Self {
            x0,
            c: [c0, c1, c2, a3 / h.powi(3), a4 / h.powi(4), a5 / h.powi(5)],
        }
    }

    fn value(&self, a: f64) -> f64 {
        let t = a - self.x0;
        self.c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
    }

    fn deriv(&self, a: f64) -> f64 {
        let t = a - self.x0;
        let c = &self.c;
        ((((5.0 * c[5] * t + 4.0 * c[4]) * t + 3.0 * c[3]) * t + 2.0 * c[2]) * t) + c[1]
    }

    fn second_deriv(&self, a: f64) -> f64 {
        let t = a - self.x0;
        let c = &self.c;
        (((20.0 * c[5] * t + 12.0 * c[4]) * t + 6.0 * c[3]) * t) + 2.0 * c[2]
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSpec {
    truncation_point: f64,
    blend_width: f64,
    mode: BlendMode,
    patch: Option<HermitePatch>,
    lipschitz: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::piecewise(2.0).expect("default truncation point is valid")
    }
}

impl PotentialSpec {
    pub fn new(truncation_point: f64, blend_width: f64, mode: BlendMode) -> Result<Self> {
        if !(truncation_point.is_finite() && truncation_point > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation point must be > 1, got {truncation_point}"
            )));
        }
        if !(blend_width.is_finite() && blend_width >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "blend width must be >= 0, got {blend_width}"
            )));
        }
        if mode == BlendMode::Blended && truncation_point - blend_width <= 1.0 {
            return Err(Error::InvalidParameter(
                "blend band must stay clear of the wells at ±1".into(),
            ));
        }
        let mut spec = Self {
            truncation_point,
            blend_width,
            mode,
            patch: None,
            lipschitz: 3.0 * truncation_point * truncation_point - 1.0,
        };
        if mode == BlendMode::Blended && blend_width > 0.0 {
            let lo = truncation_point - blend_width;
            let hi = truncation_point + blend_width;
            let left = [
                spec.inner_value(lo),
                spec.inner_deriv(lo),
                3.0 * lo * lo - 1.0,
            ];
            let right = [
                spec.outer_value(hi),
                spec.outer_deriv(hi),
                spec.outer_slope(),
            ];
            spec.patch = Some(HermitePatch::new(lo, hi, left, right));
            spec.lipschitz = spec.sampled_lipschitz();
        }
        Ok(spec)
    }

    /// Exact piecewise form with truncation at `±truncation_point`.
    pub fn piecewise(truncation_point: f64) -> Result<Self> {
        Self::new(truncation_point, 0.0, BlendMode::Piecewise)
    }

    /// `C²` variant with a quintic patch of half-width `blend_width`.
    pub fn blended(truncation_point: f64, blend_width: f64) -> Result<Self> {
        Self::new(truncation_point, blend_width, BlendMode::Blended)
    }

    pub fn truncation_point(&self) -> f64 {
        self.truncation_point
    }

    pub fn blend_width(&self) -> f64 {
        self.blend_width
    }

    pub fn mode(&self) -> BlendMode {
        self.mode
    }

    fn outer_slope(&self) -> f64 {
        3.0 * self.truncation_point * self.truncation_point - 1.0
    }

    fn inner_value(&self, a: f64) -> f64 {
        let q = a * a - 1.0;
        0.25 * q * q
    }

    fn inner_deriv(&self, a: f64) -> f64 {
        a * a * a - a
    }

    fn outer_value(&self, a: f64) -> f64 {
        let t = self.truncation_point;
        let d = a - t;
        0.5 * self.outer_slope() * d * d + self.inner_deriv(t) * d + self.inner_value(t)
    }

    fn outer_deriv(&self, a: f64) -> f64 {
        let t = self.truncation_point;
        self.outer_slope() * (a - t) + self.inner_deriv(t)
    }

    fn in_patch(&self, a: f64) -> Option<&HermitePatch> {
        self.patch
            .as_ref()
            .filter(|_| (a - self.truncation_point).abs() <= self.blend_width)
    }

    /// `F(φ)`, the bulk energy density.
    pub fn value(&self, phi: f64) -> f64 {
        let a = phi.abs();
        if let Some(p) = self.in_patch(a) {
            p.value(a)
        } else if a <= self.truncation_point {
            self.inner_value(a)
        } else {
            self.outer_value(a)
        }
    }

    /// `f(φ) = F'(φ)`.
    pub fn deriv(&self, phi: f64) -> f64 {
        let a = phi.abs();
        let g = if let Some(p) = self.in_patch(a) {
            p.deriv(a)
        } else if a <= self.truncation_point {
            self.inner_deriv(a)
        } else {
            self.outer_deriv(a)
        };
        if phi < 0.0 {
            -g
        } else {
            g
        }
    }

    /// `f'(φ) = F''(φ)`.
    pub fn second_deriv(&self, phi: f64) -> f64 {
        let a = phi.abs();
        if let Some(p) = self.in_patch(a) {
            p.second_deriv(a)
        } else if a <= self.truncation_point {
            3.0 * a * a - 1.0
        } else {
            self.outer_slope()
        }
    }

    /// `L = sup |f'|`. Analytic for the piecewise form, sampled over the
    /// blend band otherwise.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    fn sampled_lipschitz(&self) -> f64 {
        let lo = self.truncation_point - self.blend_width;
        let width = 2.0 * self.blend_width;
        let samples = 20_000;
        (0..=samples)
            .map(|i| {
                self.second_deriv(lo + width * i as f64 / samples as f64)
                    .abs()
            })
            .fold(self.outer_slope(), f64::max)
    }
}
