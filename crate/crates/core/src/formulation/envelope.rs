use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Convex envelopes of `cos θ` and `sin θ` on `[-θ̄, θ̄]`, `0 < θ̄ ≤ π/2`:
///
/// ```text
/// cos θ ≤ 1 - (1 - cos θ̄)/θ̄² · θ²        cos θ ≥ cos θ̄
/// sin θ ≤ cos(θ̄/2)·(θ - θ̄/2) + sin(θ̄/2)
/// sin θ ≥ cos(θ̄/2)·(θ + θ̄/2) - sin(θ̄/2)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSet {
    pub angle_max: f64,
    /// `(1 - cos θ̄)/θ̄²`
    pub cos_quad: f64,
    /// `cos θ̄`
    pub cos_lower: f64,
    /// `cos(θ̄/2)`
    pub sin_slope: f64,
    /// `sin(θ̄/2) - cos(θ̄/2)·θ̄/2`
    pub sin_offset: f64,
}

pub fn make_envelopes(angle_max: f64) -> Result<EnvelopeSet> {
    if !(angle_max > 0.0 && angle_max <= FRAC_PI_2) {
        return Err(Error::Formulation(format!(
            "angle limit {angle_max} outside (0, π/2]"
        )));
    }
    let half = 0.5 * angle_max;
    Ok(EnvelopeSet {
        angle_max,
        cos_quad: (1.0 - angle_max.cos()) / (angle_max * angle_max),
        cos_lower: angle_max.cos(),
        sin_slope: half.cos(),
        sin_offset: half.sin() - half.cos() * half,
    })
}

impl EnvelopeSet {
    pub fn cos_upper(&self, theta: f64) -> f64 {
        1.0 - self.cos_quad * theta * theta
    }

    pub fn sin_upper(&self, theta: f64) -> f64 {
        self.sin_slope * theta + self.sin_offset
    }

    pub fn sin_lower(&self, theta: f64) -> f64 {
        self.sin_slope * theta - self.sin_offset
    }

    /// Range of the sine auxiliary variable.
    pub fn sin_bounds(&self) -> (f64, f64) {
        let s = self.angle_max.sin();
        (-s, s)
    }
}

/// McCormick envelope of `z = x·y` over `x ∈ [xl, xu]`, `y ∈ [yl, yu]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCormick {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl McCormick {
    pub fn new(xl: f64, xu: f64, yl: f64, yu: f64) -> Self {
        McCormick {
            x: (xl, xu),
            y: (yl, yu),
        }
    }

    /// The four planes `z ⋚ cx·x + cy·y + c0` as `(cx, cy, c0, is_lower)`.
    pub fn planes(&self) -> [(f64, f64, f64, bool); 4] {
        let ((xl, xu), (yl, yu)) = (self.x, self.y);
        [
            (yl, xl, -xl * yl, true),
            (yu, xu, -xu * yu, true),
            (yu, xl, -xl * yu, false),
            (yl, xu, -xu * yl, false),
        ]
    }

    /// `[lower, upper]` admitted for `z` at `(x, y)`.
    pub fn bounds(&self, x: f64, y: f64) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (cx, cy, c0, lower) in self.planes() {
            let v = cx * x + cy * y + c0;
            if lower {
                lo = lo.max(v);
            } else {
                hi = hi.min(v);
            }
        }
        (lo, hi)
    }

    /// Range of `x·y` over the box.
    pub fn product_range(&self) -> (f64, f64) {
        let c = [
            self.x.0 * self.y.0,
            self.x.0 * self.y.1,
            self.x.1 * self.y.0,
            self.x.1 * self.y.1,
        ];
        (
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn cosine_envelope_endpoints() {
        let e = make_envelopes(FRAC_PI_6).unwrap();
        assert_eq!(e.cos_upper(0.0), 1.0);
        assert!((e.cos_upper(FRAC_PI_6) - FRAC_PI_6.cos()).abs() < 1e-15);
        let c = 0.3f64.cos();
        assert!((c - 0.955336).abs() < 1e-6);
        assert!(e.cos_lower <= c && c <= e.cos_upper(0.3));
    }

    #[test]
    fn sine_contained_on_samples() {
        let e = make_envelopes(FRAC_PI_4).unwrap();
        for i in 0..1000 {
            let th = -FRAC_PI_4 + 2.0 * FRAC_PI_4 * i as f64 / 999.0;
            assert!(th.sin() <= e.sin_upper(th) + 1e-12);
            assert!(th.sin() >= e.sin_lower(th) - 1e-12);
        }
    }

    #[test]
    fn rejects_wide_interval() {
        assert!(make_envelopes(1.6).is_err());
        assert!(make_envelopes(0.0).is_err());
    }

    #[test]
    fn degenerate_mccormick_is_exact() {
        let m = McCormick::new(1.0, 1.0, 0.8, 1.0);
        let (lo, hi) = m.bounds(1.0, 0.93);
        assert!((lo - 0.93).abs() < 1e-15 && (hi - 0.93).abs() < 1e-15);
    }
}
