//! Quasi-normal modes (morphology-dependent resonances) of a dielectric sphere.
//!
//! Inside the sphere the radial function is `psi_l(n0 w r)`, outside it is the
//! outgoing `xi_l(w r)`. Continuity of `f` and of `beta f'` at the surface
//! (`beta = 1` for TE, `1/eps` for TM) gives, in the size parameter
//! `x = w a / c`,
//!
//! ```text
//! TE:  n0   psi_l'(n0 x)/psi_l(n0 x) - xi_l'(x)/xi_l(x) = 0
//! TM:  1/n0 psi_l'(n0 x)/psi_l(n0 x) - xi_l'(x)/xi_l(x) = 0
//! ```
//!
//! Roots are stored on the decaying branch, `Im x < 0`, with `width_x = 2|Im x|`.
//! Their mirror images `-conj(x)` are implied and never stored.
//!
//! Roots are seeded from a phase scan along `Im x = -w_inf/4`, refined by
//! damped Newton iteration with the analytic derivative, and accepted only if
//! the argument-principle count over the search rectangle matches. Missing
//! roots are then recovered by bisecting the rectangle.

mod contour;
mod table;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{psi_log_derivative, xi_log_derivative, Complex, L_MAX};

pub use contour::{winding_count, Rect};
pub use table::{read_modes_csv, read_modes_json, write_modes_csv, write_modes_json, ModeTable};

/// Bumped whenever a change can alter solved tables; part of cache keys.
pub const SOLVER_VERSION: &str = "qnm-solver-1";

/// Upper edge of every counting rectangle. No resonance has `Im x > 0`.
const UPPER_EDGE: f64 = 0.5;
/// Smallest real part searched; resonances below it are ignored.
const LEFT_EDGE: f64 = 1e-3;
const SCAN_STEP: f64 = 0.05;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_MAX_STEP: f64 = 0.5;
const REFINE_RESIDUAL: f64 = 1e-10;
const REFINE_STEP: f64 = 1e-12;
const DEDUP_RADIUS: f64 = 1e-8;
/// Residual bound for a stored mode re-evaluated from scratch.
pub const COLD_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    /// Factor multiplying the interior log-derivative in the matching condition.
    pub fn interior_factor(self, n0: f64) -> f64 {
        match self {
            Polarization::TE => n0,
            Polarization::TM => 1.0 / n0,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        })
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "TE" | "te" => Ok(Polarization::TE),
            "TM" | "tm" => Ok(Polarization::TM),
            other => Err(Error::Data(format!("unknown polarization {other:?}"))),
        }
    }
}

/// One resonance of the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnmMode {
    pub pol: Polarization,
    /// Angular momentum.
    pub l: u32,
    /// Radial order, 1-based by increasing `Re x`.
    pub j: u32,
    /// Dimensionless complex resonance `w a / c`, `Im x < 0`.
    pub x: Complex,
    pub width_x: f64,
    /// Peak surface density-of-states enhancement.
    pub k_factor: f64,
}

impl QnmMode {
    /// `K * width_x`, the weight that survives the width substitution of the
    /// broadened-emitter rate.
    pub fn weight(&self) -> f64 {
        self.k_factor * self.width_x
    }

    pub fn resonance(&self) -> f64 {
        self.x.re
    }
}

fn check_index(n0: f64) -> Result<()> {
    if !(n0 > 1.0 && n0.is_finite()) {
        return Err(Error::Domain(format!("refractive index must exceed 1, got {n0}")));
    }
    Ok(())
}

/// Limiting width `(1/n0) ln((n0+1)/(n0-1))` approached by high radial orders.
pub fn asymptotic_width(n0: f64) -> Result<f64> {
    check_index(n0)?;
    Ok(((n0 + 1.0) / (n0 - 1.0)).ln() / n0)
}

/// Characteristic function whose zeros are the resonances.
pub fn characteristic_value(pol: Polarization, l: u32, n0: f64, x: Complex) -> Result<Complex> {
    check_index(n0)?;
    let inner = psi_log_derivative(l, n0 * x)?;
    let outer = xi_log_derivative(l, x)?;
    let f = pol.interior_factor(n0) * inner - outer;
    if !(f.re.is_finite() && f.im.is_finite()) {
        return Err(Error::Domain(format!("x = {x} is a pole of the characteristic function")));
    }
    Ok(f)
}

/// `F(x)` and `dF/dx`, using `D' = l(l+1)/z^2 - 1 - D^2` for both log-derivatives.
fn characteristic_with_derivative(pol: Polarization, l: u32, n0: f64, x: Complex) -> Result<(Complex, Complex)> {
    let w = n0 * x;
    let inner = psi_log_derivative(l, w)?;
    let outer = xi_log_derivative(l, x)?;
    let ll = (l as f64) * (l as f64 + 1.0);
    let a = pol.interior_factor(n0);
    let f = a * inner - outer;
    let d_inner = ll / (w * w) - 1.0 - inner * inner;
    let d_outer = ll / (x * x) - 1.0 - outer * outer;
    let df = a * n0 * d_inner - d_outer;
    if !(f.re.is_finite() && f.im.is_finite() && df.re.is_finite() && df.im.is_finite()) {
        return Err(Error::Domain(format!("x = {x} is a pole of the characteristic function")));
    }
    Ok((f, df))
}

/// Damped Newton refinement of a single root.
pub fn refine_root(pol: Polarization, l: u32, n0: f64, seed: Complex) -> Result<Complex> {
    let fail = |reason: String| Error::Convergence {
        seed_re: seed.re,
        seed_im: seed.im,
        reason,
    };
    let mut x = seed;
    let (mut f, mut df) = characteristic_with_derivative(pol, l, n0, x).map_err(|e| fail(e.to_string()))?;
    for _ in 0..NEWTON_MAX_ITER {
        if df.norm() == 0.0 {
            return Err(fail("vanishing derivative".into()));
        }
        let mut step = f / df;
        if step.norm() > NEWTON_MAX_STEP {
            step *= NEWTON_MAX_STEP / step.norm();
        }
        // Backtrack while the residual grows, e.g. when stepping towards a pole.
        let mut accepted = None;
        for _ in 0..12 {
            let trial = x - step;
            if trial.re > 0.0 {
                if let Ok((ft, dft)) = characteristic_with_derivative(pol, l, n0, trial) {
                    if ft.norm() <= f.norm() || step.norm() < 1e-9 {
                        accepted = Some((trial, ft, dft));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((next, fn_, dfn)) = accepted else {
            return Err(fail(format!("no descent step from {x}")));
        };
        x = next;
        f = fn_;
        df = dfn;
        if f.norm() < REFINE_RESIDUAL && step.norm() < REFINE_STEP {
            return Ok(x);
        }
        if f.norm() < REFINE_RESIDUAL {
            // One more plain step certifies the step-size criterion.
            let last = f / df;
            let trial = x - last;
            if let Ok((ft, dft)) = characteristic_with_derivative(pol, l, n0, trial) {
                if ft.norm() < REFINE_RESIDUAL && last.norm() < REFINE_STEP {
                    return Ok(trial);
                }
                if ft.norm() <= f.norm() {
                    x = trial;
                    f = ft;
                    df = dft;
                }
            }
        }
    }
    Err(fail(format!("no convergence after {NEWTON_MAX_ITER} iterations, last x = {x}, |F| = {:.2e}", f.norm())))
}

fn push_unique(roots: &mut Vec<Complex>, x: Complex) -> bool {
    if roots.iter().any(|r| (r - x).norm() < DEDUP_RADIUS) {
        return false;
    }
    roots.push(x);
    true
}

/// Seeds from local minima of `|F|` along `Im x = -w_inf/4`.
fn scan_seeds(pol: Polarization, l: u32, n0: f64, re_from: f64, re_to: f64, w_inf: f64) -> Vec<Complex> {
    let im = -0.25 * w_inf;
    let count = ((re_to - re_from) / SCAN_STEP).ceil().max(1.0) as usize;
    let samples: Vec<(Complex, f64)> = (0..=count)
        .map(|i| {
            let x = Complex::new(re_from + (re_to - re_from) * i as f64 / count as f64, im);
            let size = characteristic_value(pol, l, n0, x).map(|f| f.norm()).unwrap_or(f64::INFINITY);
            (x, size)
        })
        .collect();
    let mut seeds = Vec::new();
    for i in 0..samples.len() {
        let here = samples[i].1;
        let left = if i > 0 { samples[i - 1].1 } else { f64::INFINITY };
        let right = samples.get(i + 1).map(|s| s.1).unwrap_or(f64::INFINITY);
        if here.is_finite() && here <= left && here <= right {
            seeds.push(samples[i].0);
        }
    }
    seeds
}

struct Search {
    pol: Polarization,
    l: u32,
    n0: f64,
}

impl Search {
    fn count(&self, rect: &Rect) -> Result<i64> {
        winding_count(self.pol, self.l, self.n0, rect)
    }

    /// Counts with edges nudged away from unresolved near-boundary zeros.
    fn count_nudged(&self, rect: &mut Rect, known: &[Complex], movable_left: bool) -> Result<i64> {
        let mut last_err = None;
        for attempt in 0..6 {
            nudge_edges(rect, known, movable_left);
            match self.count(rect) {
                Ok(n) => return Ok(n),
                Err(e) => {
                    let shift = 1.3e-3 * (attempt + 1) as f64;
                    if movable_left {
                        rect.re_min = (rect.re_min - shift).max(LEFT_EDGE);
                    }
                    rect.re_max += shift;
                    rect.im_min -= shift;
                    last_err = Some(e);
                }
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Domain("contour count failed".into())))
    }

    /// Bisects `rect` until every counted root has been located.
    fn recover(&self, rect: Rect, expected: i64, roots: &mut Vec<Complex>, depth: u32) -> Result<()> {
        let inside = |roots: &Vec<Complex>| roots.iter().filter(|r| rect.contains(**r)).count() as i64;
        if inside(roots) >= expected {
            return Ok(());
        }
        let probes = [
            rect.center(),
            Complex::new(rect.re_min + 0.25 * rect.width(), rect.im_min + 0.25 * rect.height()),
            Complex::new(rect.re_min + 0.75 * rect.width(), rect.im_min + 0.25 * rect.height()),
            Complex::new(rect.re_min + 0.25 * rect.width(), rect.im_min + 0.75 * rect.height()),
            Complex::new(rect.re_min + 0.75 * rect.width(), rect.im_min + 0.75 * rect.height()),
        ];
        if rect.width() < 4.0 {
            let mut last_err = None;
            for p in probes {
                match refine_root(self.pol, self.l, self.n0, p) {
                    Ok(r) if r.im < 0.0 => {
                        push_unique(roots, r);
                    }
                    Ok(_) => {}
                    Err(e) => last_err = Some(e),
                }
            }
            if inside(roots) >= expected {
                return Ok(());
            }
            if depth > 40 {
                return Err(last_err.unwrap_or(Error::MissedRoot {
                    l: self.l,
                    expected,
                    found: inside(roots) as usize,
                }));
            }
        }
        let (mut a, mut b) = split(&rect);
        let mut jitter = 0.0;
        let count_a = loop {
            match self.count(&a) {
                Ok(n) => break n,
                Err(_) if jitter < 0.2 => {
                    jitter += 0.0137;
                    let (a2, b2) = split_at(&rect, 0.5 + jitter);
                    a = a2;
                    b = b2;
                }
                Err(e) => return Err(e),
            }
        };
        let count_b = expected - count_a;
        if count_a > 0 {
            self.recover(a, count_a, roots, depth + 1)?;
        }
        if count_b > 0 {
            self.recover(b, count_b, roots, depth + 1)?;
        }
        Ok(())
    }
}

fn split(rect: &Rect) -> (Rect, Rect) {
    split_at(rect, 0.5)
}

fn split_at(rect: &Rect, frac: f64) -> (Rect, Rect) {
    if rect.width() >= rect.height() {
        let cut = rect.re_min + frac * rect.width();
        (
            Rect::new(rect.re_min, cut, rect.im_min, rect.im_max),
            Rect::new(cut, rect.re_max, rect.im_min, rect.im_max),
        )
    } else {
        let cut = rect.im_min + frac * rect.height();
        (
            Rect::new(rect.re_min, rect.re_max, rect.im_min, cut),
            Rect::new(rect.re_min, rect.re_max, cut, rect.im_max),
        )
    }
}

/// Moves rectangle edges outward until no known root lies within 1e-4 of them.
fn nudge_edges(rect: &mut Rect, known: &[Complex], movable_left: bool) {
    const CLEARANCE: f64 = 1e-4;
    for _ in 0..100 {
        let mut moved = false;
        for r in known {
            if movable_left && (r.re - rect.re_min).abs() < CLEARANCE && rect.re_min - 1e-3 > LEFT_EDGE {
                rect.re_min -= 1e-3;
                moved = true;
            }
            if (r.re - rect.re_max).abs() < CLEARANCE {
                rect.re_max += 1e-3;
                moved = true;
            }
            if (r.im - rect.im_min).abs() < CLEARANCE {
                rect.im_min -= 1e-3;
                moved = true;
            }
        }
        if !moved {
            return;
        }
    }
}

fn k_factor(pol: Polarization, l: u32, n0: f64, x: Complex) -> Result<f64> {
    let width = 2.0 * x.im.abs();
    let degeneracy = (2 * l + 1) as f64 / ((n0 * n0 - 1.0) * x.re * x.re * width);
    match pol {
        Polarization::TE => Ok(degeneracy),
        Polarization::TM => {
            // Tangential share of the TM surface field, from the interior
            // normalization S = (1/n0^2) [D^2 + l(l+1)/x^2], D = psi'/psi at n0 x.
            let d = psi_log_derivative(l, n0 * x)?;
            let ll = (l as f64) * (l as f64 + 1.0);
            let tangential = d * d;
            let total = tangential + ll / (x * x);
            Ok(degeneracy * (tangential / total).norm())
        }
    }
}

/// All resonances with `0 < Re x <= x_max` and `width_x <= max_width`.
pub fn find_modes(pol: Polarization, l: u32, n0: f64, x_max: f64, max_width: f64) -> Result<Vec<QnmMode>> {
    find_modes_in_band(pol, l, n0, 0.0, x_max, max_width)
}

/// All resonances with `x_min < Re x <= x_max` and `width_x <= max_width`,
/// radial orders counted from the lowest resonance of this `l`.
///
/// `l = 0` is accepted for testing against the closed-form TE family even
/// though vector modes need `l >= 1`.
pub fn find_modes_in_band(
    pol: Polarization,
    l: u32,
    n0: f64,
    x_min: f64,
    x_max: f64,
    max_width: f64,
) -> Result<Vec<QnmMode>> {
    let w_inf = asymptotic_width(n0)?;
    if l > L_MAX {
        return Err(Error::Domain(format!("l = {l} exceeds {L_MAX}")));
    }
    if !(x_max > 0.0 && x_max > x_min && x_min >= 0.0) {
        return Err(Error::Domain(format!("invalid search band ({x_min}, {x_max}]")));
    }
    if !(max_width >= w_inf) {
        return Err(Error::Domain(format!(
            "width cap {max_width} is below the asymptotic width {w_inf}"
        )));
    }
    let search = Search { pol, l, n0 };
    let start = x_min.max(LEFT_EDGE);
    let mut roots: Vec<Complex> = Vec::new();
    for seed in scan_seeds(pol, l, n0, (start - 0.5).max(LEFT_EDGE), x_max + 0.5, w_inf) {
        if let Ok(r) = refine_root(pol, l, n0, seed) {
            if r.im < 0.0 {
                push_unique(&mut roots, r);
            }
        }
    }

    let mut rect = Rect::new(start, x_max, -0.5 * max_width, UPPER_EDGE);
    let movable_left = start > LEFT_EDGE;
    let expected = search.count_nudged(&mut rect, &roots, movable_left)?;
    let found = roots.iter().filter(|r| rect.contains(**r)).count() as i64;
    if found < expected {
        log::debug!("l={l}: scan found {found} of {expected} roots, bisecting");
        search.recover(rect, expected, &mut roots, 0)?;
    }
    let mut inside: Vec<Complex> = roots.into_iter().filter(|r| rect.contains(*r)).collect();
    if inside.len() as i64 != expected {
        return Err(Error::MissedRoot {
            l,
            expected,
            found: inside.len(),
        });
    }
    inside.sort_by(|a, b| a.re.total_cmp(&b.re));

    let below = if rect.re_min > LEFT_EDGE {
        let below_rect = Rect::new(LEFT_EDGE, rect.re_min, rect.im_min, UPPER_EDGE);
        search.count(&below_rect)?
    } else {
        0
    };

    let mut modes = Vec::new();
    for (rank, x) in inside.into_iter().enumerate() {
        let width_x = 2.0 * x.im.abs();
        let in_band = x.re > x_min && x.re <= x_max && width_x <= max_width;
        if !in_band {
            continue;
        }
        modes.push(QnmMode {
            pol,
            l,
            j: (below + rank as i64 + 1) as u32,
            x,
            width_x,
            k_factor: k_factor(pol, l, n0, x)?,
        });
    }
    Ok(modes)
}

/// Local free spectral range at `x0`: `Re x_{l+1,1} - Re x_{l,1}` for the pair
/// of least-leaky modes bracketing `x0`.
pub fn fsr_spacing(table: &ModeTable, x0: f64) -> Result<f64> {
    let firsts = table.least_leaky_modes();
    let pair = firsts
        .windows(2)
        .find(|w| w[0].x.re <= x0 && x0 < w[1].x.re)
        .ok_or_else(|| Error::Range(format!("x0 = {x0} is not bracketed by least-leaky modes of the table")))?;
    Ok(pair[1].x.re - pair[0].x.re)
}

/// The least-leaky (j = 1) mode whose resonance is nearest `x0`; ties go to
/// the narrower mode.
pub fn least_leaky_mode(table: &ModeTable, x0: f64) -> Result<QnmMode> {
    let firsts = table.least_leaky_modes();
    let (Some(first), Some(last)) = (firsts.first(), firsts.last()) else {
        return Err(Error::Range("table holds no least-leaky modes".into()));
    };
    if x0 < first.x.re - table.fsr_or(PI) || x0 > last.x.re + table.fsr_or(PI) {
        return Err(Error::Range(format!(
            "x0 = {x0} lies outside the least-leaky band [{}, {}]",
            first.x.re, last.x.re
        )));
    }
    let best = firsts
        .iter()
        .min_by(|a, b| {
            let da = (a.x.re - x0).abs();
            let db = (b.x.re - x0).abs();
            da.total_cmp(&db).then(a.width_x.total_cmp(&b.width_x))
        })
        .copied()
        .expect("non-empty");
    Ok(best)
}
