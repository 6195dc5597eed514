//! Surface density of states and spontaneous emission of a broadened
//! surface emitter on a dielectric sphere.
//!
//! Everything inside works in the dimensionless frequency `x = w a / c`.
//! Wavelength and linewidth enter through `alpha = 2 pi / lambda0` and
//! `beta = 2 pi * wavenumber`, both in inverse micrometers, so that
//! `x0 = alpha a` and the emitter width is `beta a`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnm::{least_leaky_mode, ModeTable, Polarization, QnmMode};
use crate::specfun::Complex;

/// Speed of light in micrometers per nanosecond.
pub const C_UM_PER_NS: f64 = 2.997_924_58e5;

/// Strong and weak coupling lie a factor of this beyond the crossover.
const REGIME_FACTOR: f64 = 100.0;
/// Mode-sum coverage margin, in free spectral ranges.
const COVERAGE_FSR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub n0: f64,
    pub radius_um: f64,
}

impl SphereSpec {
    pub fn new(n0: f64, radius_um: f64) -> Result<Self> {
        if !(n0 > 1.0 && n0.is_finite()) {
            return Err(Error::Domain(format!("n0 must exceed 1, got {n0}")));
        }
        if !(radius_um > 0.0 && radius_um < 1e4) {
            return Err(Error::Domain(format!("radius must lie in (0, 1e4) um, got {radius_um}")));
        }
        Ok(Self { n0, radius_um })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    /// Center wavelength of the fluorescence, nm.
    pub lambda0_nm: f64,
    /// Homogeneous linewidth (FWHM) as a wavenumber, cm^-1.
    pub gamma_h_cm: f64,
    /// Dipole degrees of freedom, 1 to 3.
    pub dipole_dof: u8,
    /// Radiative lifetime in vacuum, ns.
    pub tau0_ns: f64,
}

impl EmitterSpec {
    pub fn new(lambda0_nm: f64, gamma_h_cm: f64, dipole_dof: u8, tau0_ns: f64) -> Result<Self> {
        if !(lambda0_nm > 0.0 && lambda0_nm.is_finite()) {
            return Err(Error::Domain(format!("lambda0_nm must be positive, got {lambda0_nm}")));
        }
        if !(gamma_h_cm >= 0.0 && gamma_h_cm.is_finite()) {
            return Err(Error::Domain(format!("gamma_h_cm must be non-negative, got {gamma_h_cm}")));
        }
        if !(1..=3).contains(&dipole_dof) {
            return Err(Error::Domain(format!("dipole_dof must be 1, 2 or 3, got {dipole_dof}")));
        }
        if !(tau0_ns > 0.0 && tau0_ns.is_finite()) {
            return Err(Error::Domain(format!("tau0_ns must be positive, got {tau0_ns}")));
        }
        Ok(Self {
            lambda0_nm,
            gamma_h_cm,
            dipole_dof,
            tau0_ns,
        })
    }

    /// Builds an emitter from `alpha` and `beta` in inverse micrometers.
    pub fn from_alpha_beta(alpha: f64, beta: f64, dipole_dof: u8, tau0_ns: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Self::new(2.0 * PI / alpha * 1e3, beta / (2.0 * PI * 1e-4), dipole_dof, tau0_ns)
    }

    /// `2 pi / lambda0` in um^-1.
    pub fn alpha(&self) -> f64 {
        2.0 * PI / (self.lambda0_nm * 1e-3)
    }

    /// `2 pi * gamma_h` in um^-1.
    pub fn beta(&self) -> f64 {
        2.0 * PI * self.gamma_h_cm * 1e-4
    }

    pub fn x0(&self, sphere: &SphereSpec) -> f64 {
        self.alpha() * sphere.radius_um
    }

    /// Emitter linewidth in x units.
    pub fn gamma_h_x(&self, sphere: &SphereSpec) -> f64 {
        self.beta() * sphere.radius_um
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Weak,
    Intermediate,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub regime: Regime,
    /// Coupling strength over damping, `L / R`.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayResult {
    /// Rate relative to the same emitter in vacuum.
    pub rate_vs_vacuum: f64,
    /// Rate relative to the emitter in the bulk liquid.
    pub rate_vs_bulk: f64,
    pub regime: Regime,
    pub dominant_mode: Option<QnmMode>,
}

fn check_te(table: &ModeTable) -> Result<()> {
    if table.pol() != Polarization::TE {
        return Err(Error::Domain("the surface density of states uses TE modes only".into()));
    }
    Ok(())
}

fn check_coverage(table: &ModeTable, x: f64) -> Result<()> {
    let margin = COVERAGE_FSR * table.fsr_x().unwrap_or(0.0);
    if !table.covers(x, margin) {
        return Err(Error::Range(format!(
            "x = {x} (margin {margin:.3}) is outside the table band ({}, {}]",
            table.x_min(),
            table.x_max()
        )));
    }
    Ok(())
}

/// `K gamma * g / (4 d^2 + g^2)` with `g` the broadened width: one mode's
/// contribution to both the density of states and the decay-rate sum.
fn lorentz_term(mode: &QnmMode, x: f64, extra_width_x: f64) -> f64 {
    let g = mode.width_x + extra_width_x;
    let d = x - mode.x.re;
    mode.weight() * g / (4.0 * d * d + g * g)
}

/// Surface density of states over its vacuum value at `x`, from every mode
/// in the table, each Lorentzian widened by `extra_width_x`.
pub fn density_of_states(x: f64, table: &ModeTable, extra_width_x: f64) -> Result<f64> {
    check_te(table)?;
    if !(extra_width_x >= 0.0) {
        return Err(Error::Domain(format!("extra width must be non-negative, got {extra_width_x}")));
    }
    check_coverage(table, x)?;
    Ok(table.modes().iter().map(|m| lorentz_term(m, x, extra_width_x)).sum())
}

/// Exact integral of the density of states over `[lo, hi]`.
pub fn dos_integral(table: &ModeTable, lo: f64, hi: f64, extra_width_x: f64) -> Result<f64> {
    check_te(table)?;
    if !(hi > lo) {
        return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    check_coverage(table, lo)?;
    check_coverage(table, hi)?;
    Ok(table
        .modes()
        .iter()
        .map(|m| {
            let half = 0.5 * (m.width_x + extra_width_x);
            let up = ((hi - m.x.re) / half).atan();
            let down = ((lo - m.x.re) / half).atan();
            0.5 * m.weight() * (up - down)
        })
        .sum())
}

/// Samples the density of states on `xs`.
pub fn dos_spectrum(table: &ModeTable, xs: &[f64], extra_width_x: f64) -> Result<Vec<(f64, f64)>> {
    xs.par_iter()
        .map(|&x| density_of_states(x, table, extra_width_x).map(|d| (x, d)))
        .collect()
}

pub fn write_dos_csv<W: Write>(out: W, spectrum: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "dos_over_rho0"])?;
    for &(x, d) in spectrum {
        w.serialize((x, d))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DosPoint {
    x: f64,
    dos_over_rho0: f64,
}

pub fn write_dos_json<W: Write>(out: W, spectrum: &[(f64, f64)]) -> Result<()> {
    let points: Vec<DosPoint> = spectrum
        .iter()
        .map(|&(x, dos_over_rho0)| DosPoint { x, dos_over_rho0 })
        .collect();
    serde_json::to_writer_pretty(out, &points)?;
    Ok(())
}

/// Compares `K gamma / tau0` with `((Gamma_h + gamma) / 2)^2` for one mode.
pub fn classify_coupling(emitter: &EmitterSpec, sphere: &SphereSpec, mode: &QnmMode) -> Result<Coupling> {
    let rate_scale = C_UM_PER_NS / sphere.radius_um;
    let coupling = mode.weight() * rate_scale / emitter.tau0_ns;
    let damping = (0.5 * (emitter.gamma_h_x(sphere) + mode.width_x) * rate_scale).powi(2);
    let margin = coupling / damping;
    if !margin.is_finite() && !(coupling.is_finite() && damping == 0.0) {
        return Err(Error::Overflow(format!("coupling ratio {coupling} / {damping}")));
    }
    let regime = if margin > REGIME_FACTOR {
        Regime::Strong
    } else if margin < 1.0 / REGIME_FACTOR {
        Regime::Weak
    } else {
        Regime::Intermediate
    };
    Ok(Coupling { regime, margin })
}

/// Weak-coupling decay rate from the full mode sum, evaluated at
/// `x0 = alpha a` without snapping to a resonance.
pub fn decay_rate_general(
    emitter: &EmitterSpec,
    sphere: &SphereSpec,
    table: &ModeTable,
    xi_lc: f64,
) -> Result<DecayResult> {
    check_te(table)?;
    check_xi(xi_lc)?;
    if (table.n0() - sphere.n0).abs() > 1e-12 * sphere.n0 {
        return Err(Error::Domain(format!(
            "table solved for n0 = {}, sphere has n0 = {}",
            table.n0(),
            sphere.n0
        )));
    }
    let x0 = emitter.x0(sphere);
    check_coverage(table, x0)?;
    let dominant = least_leaky_mode(table, x0).ok();
    let regime = match &dominant {
        Some(mode) => {
            let c = classify_coupling(emitter, sphere, mode)?;
            if c.regime == Regime::Strong {
                return Err(Error::Regime { margin: c.margin });
            }
            c.regime
        }
        None => Regime::Weak,
    };
    let extra = emitter.gamma_h_x(sphere);
    let sum: f64 = table.modes().iter().map(|m| lorentz_term(m, x0, extra)).sum();
    let rate_vs_vacuum = 3.0 / f64::from(emitter.dipole_dof) * sum;
    Ok(DecayResult {
        rate_vs_vacuum,
        rate_vs_bulk: rate_vs_vacuum / (sphere.n0 * xi_lc),
        regime,
        dominant_mode: dominant,
    })
}

fn check_xi(xi_lc: f64) -> Result<()> {
    if !(xi_lc > 0.0 && xi_lc.is_finite()) {
        return Err(Error::Domain(format!("local-field factor must be positive, got {xi_lc}")));
    }
    Ok(())
}

/// Approximate `K gamma` of the least-leaky mode at `x0`.
pub fn least_leaky_weight(n0: f64, x0: f64) -> f64 {
    2.0 * n0 / ((n0 * n0 - 1.0) * x0)
}

/// Radius dependence of the rate relative to bulk for tangential dipoles:
/// a constant plus `1/a^2` (emitter width) and `1/a` (background deficit)
/// terms.
pub fn decay_rate_closed_form(emitter: &EmitterSpec, sphere: &SphereSpec, xi_lc: f64, fsr_x: f64) -> Result<f64> {
    if emitter.dipole_dof != 2 {
        return Err(Error::Domain(format!(
            "closed form holds for two dipole degrees of freedom, got {}",
            emitter.dipole_dof
        )));
    }
    let beta = emitter.beta();
    if beta <= 0.0 {
        return Err(Error::Domain("closed form needs a nonzero emitter linewidth".into()));
    }
    check_xi(xi_lc)?;
    if !(fsr_x > 0.0) {
        return Err(Error::Domain(format!("free spectral range must be positive, got {fsr_x}")));
    }
    let n0 = sphere.n0;
    let a = sphere.radius_um;
    let bracket = 1.0
        + 2.0 * n0 / (n0 * n0 - 1.0) / emitter.alpha() * (1.0 / (beta * a * a) - 0.5 * PI / (fsr_x * a));
    Ok(1.5 / (n0 * xi_lc) * bracket)
}

/// Local-field factor of the real-cavity model, `(3 n0^2 / (2 n0^2 + 1))^2`.
pub fn real_cavity_factor(n0: f64) -> Result<f64> {
    if !(n0 >= 1.0 && n0.is_finite()) {
        return Err(Error::Domain(format!("n0 must be at least 1, got {n0}")));
    }
    let n2 = n0 * n0;
    Ok((3.0 * n2 / (2.0 * n2 + 1.0)).powi(2))
}

/// Large-radius limit of the bulk-normalized rate, `3 / (2 n0 xi)`.
pub fn large_radius_rate(n0: f64, xi_lc: f64) -> f64 {
    1.5 / (n0 * xi_lc)
}

/// Inverts the large-radius limit: the local-field factor implied by a
/// measured asymptotic rate `g`.
pub fn extract_local_field_factor(g: f64, n0: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Domain(format!("asymptotic rate must be positive, got {g}")));
    }
    if !(n0 > 1.0 && n0.is_finite()) {
        return Err(Error::Domain(format!("n0 must exceed 1, got {n0}")));
    }
    Ok(1.5 / (n0 * g))
}

/// Share of the sum rule left to the non-resonant background, `1 - (pi/2) K gamma / fsr`.
/// Negative values mean the resonant mode alone overfills the sum rule.
pub fn background_weight(k_times_gamma: f64, fsr_x: f64) -> Result<f64> {
    if !(fsr_x > 0.0) {
        return Err(Error::Domain(format!("free spectral range must be positive, got {fsr_x}")));
    }
    Ok(1.0 - 0.5 * PI * k_times_gamma / fsr_x)
}

/// Excited-state amplitude coupled to one cavity mode, from
/// `C'' + ((Gamma_h + gamma)/2) C' + (K gamma / (4 tau0)) C = 0`,
/// `C(0) = 1`, `C'(0) = 0`. All rates share one inverse-time unit.
pub fn single_mode_amplitude(k: f64, gamma: f64, gamma_h: f64, tau0: f64, t: f64) -> Complex {
    let mean = Complex::new(-0.25 * (gamma_h + gamma), 0.0);
    let c = k * gamma / (4.0 * tau0);
    let d = (mean * mean - c).sqrt();
    let dt = d * t;
    if dt.norm() < 1e-3 {
        let z = dt * dt;
        let cosh = 1.0 + z * (0.5 + z * (1.0 / 24.0 + z / 720.0));
        let sinhc = t * (1.0 + z * (1.0 / 6.0 + z * (1.0 / 120.0 + z / 5040.0)));
        return (mean * t).exp() * (cosh - mean * sinhc);
    }
    // Both exponents have non-positive real part, so neither term overflows.
    let r = mean / d;
    0.5 * ((1.0 - r) * ((mean + d) * t).exp() + (1.0 + r) * ((mean - d) * t).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ModeSum,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed_form",
            Method::ModeSum => "mode_sum",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "closed_form" | "closed-form" => Ok(Method::ClosedForm),
            "mode_sum" | "mode-sum" => Ok(Method::ModeSum),
            other => Err(Error::Data(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub n0: f64,
    pub emitter: EmitterSpec,
    pub xi_lc: f64,
    pub fsr_x: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub radius_um: f64,
    pub rate_vs_bulk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub params: CurveParams,
    pub points: Vec<CurvePoint>,
}

impl DecayCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["radius_um", "rate_vs_bulk"])?;
        for p in &self.points {
            w.serialize((p.radius_um, p.rate_vs_bulk))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Rate relative to bulk at each radius. `fsr_x` feeds the closed form;
/// the mode sum records the table's own spacing instead.
pub fn build_decay_curve(
    emitter: &EmitterSpec,
    n0: f64,
    radii: &[f64],
    xi_lc: f64,
    fsr_x: f64,
    method: Method,
    table: Option<&ModeTable>,
) -> Result<DecayCurve> {
    if let Some(w) = radii.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!("radii must increase strictly ({} then {})", w[0], w[1])));
    }
    check_xi(xi_lc)?;
    let table = match (method, table) {
        (Method::ModeSum, None) => return Err(Error::Domain("mode_sum needs a mode table".into())),
        (_, t) => t,
    };
    let fsr_used = match (method, table) {
        (Method::ModeSum, Some(t)) => t.fsr_x().unwrap_or(fsr_x),
        _ => fsr_x,
    };
    let rates: Vec<f64> = radii
        .par_iter()
        .map(|&a| {
            let sphere = SphereSpec::new(n0, a)?;
            let rate = match method {
                Method::ClosedForm => {
                    let kg = least_leaky_weight(n0, emitter.x0(&sphere));
                    if background_weight(kg, fsr_x)? < 0.0 {
                        log::warn!("negative background weight at a = {a} um; the closed form is outside its range");
                    }
                    decay_rate_closed_form(emitter, &sphere, xi_lc, fsr_x)?
                }
                Method::ModeSum => {
                    decay_rate_general(emitter, &sphere, table.expect("checked above"), xi_lc)?.rate_vs_bulk
                }
            };
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::Domain(format!("non-positive rate {rate}")));
            }
            Ok(rate)
        })
        .enumerate()
        .map(|(i, r)| r.map_err(|e| annotate(e, radii[i])))
        .collect::<Result<_>>()?;
    Ok(DecayCurve {
        params: CurveParams {
            n0,
            emitter: *emitter,
            xi_lc,
            fsr_x: fsr_used,
            method,
            overlay: None,
        },
        points: radii
            .iter()
            .zip(rates)
            .map(|(&radius_um, rate_vs_bulk)| CurvePoint { radius_um, rate_vs_bulk })
            .collect(),
    })
}

fn annotate(e: Error, radius: f64) -> Error {
    let at = format!("at radius {radius} um");
    match e {
        Error::Domain(s) => Error::Domain(format!("{s} {at}")),
        Error::Range(s) => Error::Range(format!("{s} {at}")),
        Error::Overflow(s) => Error::Overflow(format!("{s} {at}")),
        Error::Data(s) => Error::Data(format!("{s} {at}")),
        Error::Regime { margin } => Error::Data(format!("strong coupling (margin {margin:.3e}) {at}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rhodamine_emitter() -> EmitterSpec {
        EmitterSpec::from_alpha_beta(11.2, 0.0314, 2, 1.0).unwrap()
    }

    fn single_mode(x: Complex, k: f64) -> ModeTable {
        let m = QnmMode {
            pol: Polarization::TE,
            l: 100,
            j: 1,
            x,
            width_x: 2.0 * x.im.abs(),
            k_factor: k,
        };
        ModeTable::from_modes(Polarization::TE, 1.47, 0.0, 1e3, 2.0, vec![m]).unwrap()
    }

    #[test]
    fn alpha_beta_match_quoted_values() {
        let e = EmitterSpec::new(560.0, 50.0, 2, 1.0).unwrap();
        assert!((e.alpha() / 11.2 - 1.0).abs() < 5e-3);
        assert!((e.beta() / 0.0314 - 1.0).abs() < 5e-3);
        let p = rhodamine_emitter();
        assert!((p.alpha() - 11.2).abs() < 1e-12 && (p.beta() - 0.0314).abs() < 1e-15);
    }

    #[test]
    fn single_lorentzian_center_and_half_width() {
        let t = single_mode(Complex::new(50.0, -0.01), 3.0);
        assert!((density_of_states(50.0, &t, 0.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((density_of_states(50.01, &t, 0.0).unwrap() - 1.5).abs() < 1e-12);
        let total = dos_integral(&t, 0.0, 100.0, 0.0).unwrap();
        assert!((total - 3.0 * 0.02 * (50.0f64 / 0.01).atan()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_anchor_values() {
        let e = rhodamine_emitter();
        let xi = real_cavity_factor(1.47).unwrap();
        let at = |a: f64| decay_rate_closed_form(&e, &SphereSpec::new(1.47, a).unwrap(), xi, 0.7).unwrap();
        assert!((at(7.5) / 0.729_181_110_638_561_7 - 1.0).abs() < 1e-12);
        assert!((at(2.0) / 1.751_214_348_384_816 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_rejects_other_dipole_counts() {
        let e = EmitterSpec::from_alpha_beta(11.2, 0.0314, 3, 1.0).unwrap();
        let s = SphereSpec::new(1.47, 5.0).unwrap();
        assert!(matches!(decay_rate_closed_form(&e, &s, 1.0, 0.7), Err(Error::Domain(_))));
        let narrow = EmitterSpec::new(560.0, 0.0, 2, 1.0).unwrap();
        assert!(matches!(decay_rate_closed_form(&narrow, &s, 1.0, 0.7), Err(Error::Domain(_))));
    }

    #[test]
    fn real_cavity_limits() {
        assert_eq!(real_cavity_factor(1.0).unwrap(), 1.0);
        assert!((real_cavity_factor(1.47).unwrap() - 1.483_866_226_055_459).abs() < 1e-12);
        assert!((real_cavity_factor(1e8).unwrap() - 2.25).abs() < 1e-12);
        assert!(real_cavity_factor(0.9).is_err());
    }

    #[test]
    fn background_weight_values() {
        assert_eq!(background_weight(0.0, 0.7).unwrap(), 1.0);
        assert!(background_weight(0.7 * 2.0 / PI, 0.7).unwrap().abs() < 1e-15);
        let kg = least_leaky_weight(1.47, 84.0);
        assert!((background_weight(kg, 0.7).unwrap() - 0.932_345_752_140_800_4).abs() < 1e-12);
    }

    #[test]
    fn amplitude_special_cases() {
        for &t in &[0.0, 0.3, 5.0, 40.0] {
            assert!((single_mode_amplitude(0.0, 0.2, 1.0, 1.0, t) - 1.0).norm() < 1e-14);
            // (K gamma)/(4 tau0) = 4 -> omega = 2
            let c = single_mode_amplitude(16.0, 1.0, -1.0, 1.0, t);
            assert!((c - (2.0 * t).cos()).norm() < 1e-12, "t={t} c={c}");
        }
        // critically damped: b^2 = 4c
        let (k, g, gh, tau) = (1.0, 1.0, 1.0, 1.0);
        let lam: f64 = -0.25 * (gh + g);
        assert!(((lam * lam) - k * g / (4.0 * tau)).abs() < 1e-15);
        for &t in &[0.0, 1.0, 7.0] {
            let exact = (1.0 - lam * t) * (lam * t).exp();
            assert!((single_mode_amplitude(k, g, gh, tau, t) - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn coupling_regimes() {
        let s = SphereSpec::new(1.47, 10.0).unwrap();
        let e = EmitterSpec::new(560.0, 100.0, 2, 1.0).unwrap();
        let x0 = e.x0(&s);
        let mode = QnmMode {
            pol: Polarization::TE,
            l: 160,
            j: 1,
            x: Complex::new(x0, -1e-12),
            width_x: 2e-12,
            k_factor: least_leaky_weight(1.47, x0) / 2e-12,
        };
        assert_eq!(classify_coupling(&e, &s, &mode).unwrap().regime, Regime::Weak);
        let sharp = EmitterSpec::new(560.0, 0.0, 2, 1.0).unwrap();
        let c = classify_coupling(&sharp, &s, &mode).unwrap();
        assert_eq!(c.regime, Regime::Strong);
        assert!(c.margin > 1e10);
    }

    #[test]
    fn extraction_inverts_asymptote() {
        assert!((extract_local_field_factor(1.5 / 1.47, 1.47).unwrap() - 1.0).abs() < 1e-15);
        let xi = real_cavity_factor(1.47).unwrap();
        assert!((extract_local_field_factor(large_radius_rate(1.47, xi), 1.47).unwrap() / xi - 1.0).abs() < 1e-12);
        assert!(extract_local_field_factor(0.0, 1.47).is_err());
    }

    #[test]
    fn curve_checks_radii_and_annotates_failures() {
        let e = rhodamine_emitter();
        let c = build_decay_curve(&e, 1.47, &[], 1.0, 0.7, Method::ClosedForm, None).unwrap();
        assert!(c.points.is_empty() && c.params.fsr_x == 0.7);
        assert!(build_decay_curve(&e, 1.47, &[2.0, 2.0], 1.0, 0.7, Method::ClosedForm, None).is_err());
        assert!(build_decay_curve(&e, 1.47, &[2.0], 1.0, 0.7, Method::ModeSum, None).is_err());
        let err = build_decay_curve(&e, 1.47, &[1.0, 2e4], 1.0, 0.7, Method::ClosedForm, None).unwrap_err();
        assert!(err.to_string().contains("20000"), "{err}");
    }
}
