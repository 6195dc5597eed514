//! Riccati-Bessel functions of complex argument.
//!
//! `psi_l(z) = z j_l(z)` is the regular solution and `xi_l(z) = z h_l^(1)(z)`
//! the outgoing one. Both satisfy
//!
//! ```text
//! f''(z) + (1 - l(l+1)/z^2) f(z) = 0
//! f_{l-1}(z) + f_{l+1}(z) = (2l+1)/z f_l(z)
//! ```
//!
//! `psi` is evaluated from its logarithmic derivative `D_l = psi_l'/psi_l`,
//! which is run downward from an order well above both `l` and `|z|` (the
//! downward direction is stable for the minimal solution). Values are then
//! rebuilt from `psi_0` or `psi_1` as a product of the stable ratios
//! `psi_n / psi_{n-1} = 1 / (D_n + n/z)`. `xi` is dominant in the direction of
//! increasing order and is run upward as a ratio recurrence from the closed
//! forms of orders 0 and 1.
//!
//! Values that leave the f64 range (e.g. `psi_500(0.1)`) are still available
//! through the `*_scaled` entry points, which return a mantissa pair together
//! with a natural-log scale factor.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Largest angular momentum accepted by every function in this module.
pub const L_MAX: u32 = 500;

const I: Complex = Complex::new(0.0, 1.0);

/// Value and derivative of a Riccati-Bessel function sharing one scale:
/// `f = value * exp(log_scale)`, `f' = derivative * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub value: Complex,
    pub derivative: Complex,
    pub log_scale: f64,
}

impl ScaledPair {
    fn normalized(value: Complex, derivative: Complex, log_scale: f64) -> Result<Self> {
        if !(is_finite(value) && is_finite(derivative) && log_scale.is_finite()) {
            return Err(Error::Overflow(
                "non-finite intermediate in Riccati-Bessel evaluation".into(),
            ));
        }
        let size = value.norm().max(derivative.norm());
        if size == 0.0 {
            return Ok(Self {
                value,
                derivative,
                log_scale: 0.0,
            });
        }
        Ok(Self {
            value: value / size,
            derivative: derivative / size,
            log_scale: log_scale + size.ln(),
        })
    }

    /// Converts to plain complex numbers, failing if either leaves the f64 range.
    pub fn unscale(self) -> Result<(Complex, Complex)> {
        let factor = self.log_scale.exp();
        let value = self.value * factor;
        let derivative = self.derivative * factor;
        let lost = |scaled: Complex, plain: Complex| {
            !is_finite(plain) || (scaled != Complex::new(0.0, 0.0) && plain.norm() == 0.0)
        };
        if lost(self.value, value) || lost(self.derivative, derivative) {
            return Err(Error::Overflow(format!(
                "magnitude exp({:.1}) is outside the f64 range",
                self.log_scale
            )));
        }
        Ok((value, derivative))
    }
}

/// Running product kept as mantissa * exp(exponent).
#[derive(Debug, Clone, Copy)]
struct ScaledProduct {
    mantissa: Complex,
    exponent: f64,
}

impl ScaledProduct {
    fn new(mantissa: Complex, exponent: f64) -> Self {
        Self { mantissa, exponent }
    }

    fn mul(&mut self, factor: Complex) {
        self.mantissa *= factor;
        let size = self.mantissa.norm();
        if size > 1e100 || (size < 1e-100 && size > 0.0) {
            self.exponent += size.ln();
            self.mantissa /= size;
        }
    }
}

fn is_finite(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn check_order(l: u32) -> Result<()> {
    if l > L_MAX {
        return Err(Error::Domain(format!(
            "angular momentum {l} exceeds supported maximum {L_MAX}"
        )));
    }
    Ok(())
}

fn check_argument(z: Complex) -> Result<()> {
    if !is_finite(z) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    Ok(())
}

/// Order at which the downward log-derivative recurrence is started.
fn start_order(l: u32, abs_z: f64) -> u32 {
    let base = (l as f64).max(abs_z);
    (base + 30.0 + 10.0 * abs_z.cbrt()).ceil() as u32
}

/// `sin z` and `cos z` as mantissas sharing the scale `exp(exponent)`.
fn sin_cos_scaled(z: Complex) -> (Complex, Complex, f64) {
    if z.im.abs() < 600.0 {
        return (z.sin(), z.cos(), 0.0);
    }
    let s = z.im.abs();
    let phase = Complex::new(0.0, z.re).exp();
    let plus = phase * (-z.im - s).exp();
    let minus = phase.inv() * (z.im - s).exp();
    ((plus - minus) / (2.0 * I), (plus + minus) / 2.0, s)
}

/// `psi_l(z)` and its derivative in scaled form. Exact zeros are returned at
/// `z = 0`.
pub fn riccati_psi_scaled(l: u32, z: Complex) -> Result<ScaledPair> {
    check_order(l)?;
    check_argument(z)?;
    if z == Complex::new(0.0, 0.0) {
        let derivative = if l == 0 { 1.0 } else { 0.0 };
        return Ok(ScaledPair {
            value: Complex::new(0.0, 0.0),
            derivative: Complex::new(derivative, 0.0),
            log_scale: 0.0,
        });
    }

    let (sin_m, cos_m, exponent) = sin_cos_scaled(z);
    if l == 0 {
        return ScaledPair::normalized(sin_m, cos_m, exponent);
    }
    let psi1_m = sin_m / z - cos_m;

    // Rebuild from whichever of psi_0, psi_1 is larger; their zeros interlace.
    let anchor: u32 = if psi1_m.norm() >= sin_m.norm() { 1 } else { 0 };

    let (prev, value) = if l == 1 && anchor == 1 {
        (sin_m, psi1_m)
    } else {
        let n_start = start_order(l, z.norm());
        let mut d = Complex::from((n_start + 1) as f64) / z;
        let mut product = ScaledProduct::new(Complex::new(1.0, 0.0), 0.0);
        let mut ratio_l = Complex::new(0.0, 0.0);
        let mut n = n_start;
        while n > anchor {
            let nz = n as f64 / z;
            let shifted = d + nz;
            if n <= l {
                let ratio = shifted.inv();
                if n == l {
                    ratio_l = ratio;
                } else {
                    product.mul(ratio);
                }
            }
            d = nz - shifted.inv();
            n -= 1;
        }
        let anchor_m = if anchor == 0 { sin_m } else { psi1_m };
        let prev = anchor_m * product.mantissa;
        return finish(l, z, prev, prev * ratio_l, exponent + product.exponent);
    };
    finish(l, z, prev, value, exponent)
}

/// Assembles `(f_l, f_l')` from `f_{l-1}` and `f_l` via `f_l' = f_{l-1} - (l/z) f_l`.
fn finish(l: u32, z: Complex, prev: Complex, value: Complex, exponent: f64) -> Result<ScaledPair> {
    let derivative = prev - (l as f64 / z) * value;
    ScaledPair::normalized(value, derivative, exponent)
}

/// `xi_l(z)` and its derivative in scaled form.
pub fn riccati_xi_scaled(l: u32, z: Complex) -> Result<ScaledPair> {
    check_order(l)?;
    check_argument(z)?;
    if z == Complex::new(0.0, 0.0) {
        return Err(Error::Domain("xi_l is singular at z = 0".into()));
    }
    // xi_0 = -i e^{iz}; the real exponent -Im z is carried in the scale.
    let phase = Complex::new(0.0, z.re).exp();
    let xi0_m = -I * phase;
    if l == 0 {
        return ScaledPair::normalized(xi0_m, phase, -z.im);
    }
    // q_n = xi_n / xi_{n-1}
    let mut q = z.inv() - I;
    let mut product = ScaledProduct::new(xi0_m, -z.im);
    for n in 1..l {
        product.mul(q);
        q = (2 * n + 1) as f64 / z - q.inv();
    }
    let prev = product.mantissa;
    finish(l, z, prev, prev * q, product.exponent)
}

/// Riccati-Bessel function `psi_l(z) = z j_l(z)` and its derivative.
pub fn riccati_psi(l: u32, z: Complex) -> Result<(Complex, Complex)> {
    riccati_psi_scaled(l, z)?.unscale()
}

/// Riccati-Hankel function `xi_l(z) = z h_l^(1)(z)` and its derivative.
pub fn riccati_xi(l: u32, z: Complex) -> Result<(Complex, Complex)> {
    riccati_xi_scaled(l, z)?.unscale()
}

/// `psi_l'(z) / psi_l(z)` without forming `psi_l` itself.
pub fn psi_log_derivative(l: u32, z: Complex) -> Result<Complex> {
    check_order(l)?;
    check_argument(z)?;
    if z == Complex::new(0.0, 0.0) {
        return Err(Error::Domain("psi_l'/psi_l is singular at z = 0".into()));
    }
    let n_start = start_order(l, z.norm());
    let mut d = Complex::from((n_start + 1) as f64) / z;
    for n in ((l + 1)..=n_start).rev() {
        let nz = n as f64 / z;
        d = nz - (d + nz).inv();
    }
    if !is_finite(d) {
        return Err(Error::Domain(format!("z = {z} is a zero of psi_{l}")));
    }
    Ok(d)
}

/// `xi_l'(z) / xi_l(z)` without forming `xi_l` itself.
pub fn xi_log_derivative(l: u32, z: Complex) -> Result<Complex> {
    check_order(l)?;
    check_argument(z)?;
    if z == Complex::new(0.0, 0.0) {
        return Err(Error::Domain("xi_l'/xi_l is singular at z = 0".into()));
    }
    if l == 0 {
        return Ok(I);
    }
    let mut q = z.inv() - I;
    for n in 1..l {
        q = (2 * n + 1) as f64 / z - q.inv();
    }
    let d = q.inv() - l as f64 / z;
    if !is_finite(d) || q == Complex::new(0.0, 0.0) {
        return Err(Error::Domain(format!("z = {z} is a zero of xi_{l}")));
    }
    Ok(d)
}
