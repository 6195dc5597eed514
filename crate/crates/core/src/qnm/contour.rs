//! Root counting by the argument principle.
//!
//! The characteristic function `F = A psi'/psi - xi'/xi` has poles at the real
//! zeros of `psi_l(n0 x)` and at the zeros of `xi_l(x)`. Its zeros coincide
//! with those of the entire function `G = psi xi F = A psi' xi - psi xi'`,
//! which has no poles off the origin, so the winding number of `G` around a
//! rectangle counts resonances exactly. Only the phase of `G` is needed; it
//! is formed from the scaled mantissas of `psi` and `xi`, so the magnitudes
//! involved never overflow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Polarization;
use crate::error::{Error, Result};
use crate::specfun::{riccati_psi_scaled, riccati_xi_scaled, Complex};

/// Axis-aligned rectangle in the complex x-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn contains(&self, x: Complex) -> bool {
        x.re >= self.re_min && x.re <= self.re_max && x.im >= self.im_min && x.im <= self.im_max
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex {
        Complex::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    /// Smallest distance from `x` to the boundary (0 when `x` lies on it).
    pub fn boundary_distance(&self, x: Complex) -> f64 {
        let dx = if x.re < self.re_min {
            self.re_min - x.re
        } else if x.re > self.re_max {
            x.re - self.re_max
        } else {
            0.0
        };
        let dy = if x.im < self.im_min {
            self.im_min - x.im
        } else if x.im > self.im_max {
            x.im - self.im_max
        } else {
            0.0
        };
        if dx > 0.0 || dy > 0.0 {
            return dx.hypot(dy);
        }
        (x.re - self.re_min)
            .min(self.re_max - x.re)
            .min(x.im - self.im_min)
            .min(self.im_max - x.im)
    }

    fn corners(&self) -> [Complex; 4] {
        [
            Complex::new(self.re_min, self.im_min),
            Complex::new(self.re_max, self.im_min),
            Complex::new(self.re_max, self.im_max),
            Complex::new(self.re_min, self.im_max),
        ]
    }
}

/// Unit complex number with the phase of `G(x)`.
pub(crate) fn matching_phase(pol: Polarization, l: u32, n0: f64, x: Complex) -> Result<Complex> {
    let inner = riccati_psi_scaled(l, n0 * x)?;
    let outer = riccati_xi_scaled(l, x)?;
    let a = pol.interior_factor(n0);
    let g = a * inner.derivative * outer.value - inner.value * outer.derivative;
    let size = g.norm();
    if !(size > 0.0 && size.is_finite()) {
        return Err(Error::Domain(format!("matching function vanishes at x = {x}")));
    }
    Ok(g / size)
}

const INITIAL_STEP: f64 = 0.05;
const REFINE_ABOVE: f64 = PI / 4.0;
const MAX_DEPTH: u32 = 48;

/// Net number of resonances (zeros of `G`) inside `rect`, by the argument
/// principle. Fails with `Error::Domain` when the boundary passes so close to
/// a zero that the phase cannot be resolved.
pub fn winding_count(pol: Polarization, l: u32, n0: f64, rect: &Rect) -> Result<i64> {
    if !(rect.re_min > 0.0 && rect.re_max > rect.re_min && rect.im_max > rect.im_min) {
        return Err(Error::Domain(format!("degenerate or non-positive rectangle {rect:?}")));
    }
    let phase = |x: Complex| matching_phase(pol, l, n0, x);
    let corners = rect.corners();
    let mut total = 0.0;
    for k in 0..4 {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        let pieces = ((b - a).norm() / INITIAL_STEP).ceil().max(1.0) as usize;
        let mut za = a;
        let mut fa = phase(za)?;
        for i in 1..=pieces {
            let zb = if i == pieces {
                b
            } else {
                a + (b - a) * (i as f64 / pieces as f64)
            };
            let fb = phase(zb)?;
            total += phase_change(&phase, za, zb, fa, fb, 0)?;
            za = zb;
            fa = fb;
        }
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 {
        return Err(Error::Domain(format!(
            "non-integer winding {turns:.4} around {rect:?}"
        )));
    }
    Ok(rounded as i64)
}

fn phase_change<F>(phase: &F, a: Complex, b: Complex, fa: Complex, fb: Complex, depth: u32) -> Result<f64>
where
    F: Fn(Complex) -> Result<Complex>,
{
    let change = (fb / fa).arg();
    if change.abs() <= REFINE_ABOVE {
        return Ok(change);
    }
    let scale = a.norm().max(1.0);
    if depth >= MAX_DEPTH || (b - a).norm() < 1e-12 * scale {
        return Err(Error::Domain(format!(
            "contour passes within {:.1e} of a resonance near {a}",
            (b - a).norm()
        )));
    }
    let mid = 0.5 * (a + b);
    let fm = phase(mid)?;
    Ok(phase_change(phase, a, mid, fa, fm, depth + 1)? + phase_change(phase, mid, b, fm, fb, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_distance_inside_and_outside() {
        let r = Rect::new(1.0, 3.0, -1.0, 0.5);
        assert!((r.boundary_distance(Complex::new(2.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!((r.boundary_distance(Complex::new(4.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(r.boundary_distance(Complex::new(1.0, 0.0)), 0.0);
    }

    #[test]
    fn rejects_rectangle_touching_origin() {
        let r = Rect::new(0.0, 3.0, -1.0, 0.5);
        assert!(winding_count(Polarization::TE, 1, 1.47, &r).is_err());
    }

    #[test]
    fn counts_the_first_te_l1_root() {
        // first TE l=1 resonance for n0 = 1.47 sits near 1.917 - 0.512i
        let around = Rect::new(1.5, 2.3, -0.8, 0.5);
        assert_eq!(winding_count(Polarization::TE, 1, 1.47, &around).unwrap(), 1);
        let beside = Rect::new(0.2, 1.5, -0.8, 0.5);
        assert_eq!(winding_count(Polarization::TE, 1, 1.47, &beside).unwrap(), 0);
    }
}
