use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{characteristic_value, find_modes_in_band, fsr_spacing, Polarization, QnmMode, COLD_RESIDUAL};
use crate::error::{Error, Result};
use crate::specfun::{Complex, L_MAX};

/// Resonances of one polarization for one refractive index, complete for
/// `x_min < Re x <= x_max` and `width_x <= max_width`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    n0: f64,
    pol: Polarization,
    x_min: f64,
    x_max: f64,
    max_width: f64,
    modes: Vec<QnmMode>,
    by_resonance: Vec<usize>,
    fsr_x: Option<f64>,
}

impl ModeTable {
    /// Solves every angular momentum that has resonances in the band.
    pub fn solve(pol: Polarization, n0: f64, x_min: f64, x_max: f64, max_width: f64) -> Result<Self> {
        let mut l_hi = ((n0 * x_max).ceil() as u32 + 3).min(L_MAX);
        let mut modes: Vec<QnmMode> = solve_range(pol, n0, x_min, x_max, max_width, 1, l_hi)?;
        // Extend in case resonances sit above the usual l ~ n0 x bound.
        while l_hi < L_MAX && modes.iter().any(|m| m.l == l_hi) {
            let next = (l_hi + 5).min(L_MAX);
            modes.extend(solve_range(pol, n0, x_min, x_max, max_width, l_hi + 1, next)?);
            l_hi = next;
        }
        if l_hi == L_MAX && modes.iter().any(|m| m.l == L_MAX) {
            return Err(Error::Range(format!(
                "band up to x = {x_max} needs angular momenta above {L_MAX}"
            )));
        }
        let table = Self::from_modes(pol, n0, x_min, x_max, max_width, modes)?;
        table.verify_residuals()?;
        Ok(table)
    }

    /// Builds a table from already-known modes (read back from disk, or
    /// synthetic). Checks bookkeeping invariants, not residuals.
    pub fn from_modes(
        pol: Polarization,
        n0: f64,
        x_min: f64,
        x_max: f64,
        max_width: f64,
        mut modes: Vec<QnmMode>,
    ) -> Result<Self> {
        if !(n0 > 1.0 && n0.is_finite()) {
            return Err(Error::Domain(format!("refractive index must exceed 1, got {n0}")));
        }
        if !(x_max > x_min && x_min >= 0.0 && max_width > 0.0) {
            return Err(Error::Domain(format!("invalid table band ({x_min}, {x_max}], cap {max_width}")));
        }
        for m in &modes {
            if m.pol != pol {
                return Err(Error::Data(format!("mode l={} j={} has polarization {}", m.l, m.j, m.pol)));
            }
            if !(m.x.im < 0.0 && m.x.re > 0.0 && m.x.re.is_finite()) {
                return Err(Error::Data(format!("mode l={} j={} is off the decaying branch: {}", m.l, m.j, m.x)));
            }
            if m.width_x != 2.0 * m.x.im.abs() {
                return Err(Error::Data(format!("mode l={} j={}: width_x != 2|Im x|", m.l, m.j)));
            }
            if !(m.k_factor > 0.0 && m.k_factor.is_finite()) {
                return Err(Error::Data(format!("mode l={} j={}: bad enhancement {}", m.l, m.j, m.k_factor)));
            }
        }
        modes.sort_by(|a, b| (a.l, a.j).cmp(&(b.l, b.j)));
        if let Some(w) = modes.windows(2).find(|w| (w[0].l, w[0].j) == (w[1].l, w[1].j)) {
            return Err(Error::Data(format!("duplicate mode l={} j={}", w[0].l, w[0].j)));
        }
        let mut by_resonance: Vec<usize> = (0..modes.len()).collect();
        by_resonance.sort_by(|&a, &b| modes[a].x.re.total_cmp(&modes[b].x.re));
        let mut table = Self {
            n0,
            pol,
            x_min,
            x_max,
            max_width,
            modes,
            by_resonance,
            fsr_x: None,
        };
        table.fsr_x = table.central_fsr();
        Ok(table)
    }

    /// Overrides the representative free spectral range (for synthetic tables).
    pub fn with_fsr(mut self, fsr_x: f64) -> Self {
        self.fsr_x = Some(fsr_x);
        self
    }

    fn central_fsr(&self) -> Option<f64> {
        let center = 0.5 * (self.x_min + self.x_max);
        if let Ok(d) = fsr_spacing(self, center) {
            return Some(d);
        }
        let firsts = self.least_leaky_modes();
        let mut gaps: Vec<f64> = firsts
            .windows(2)
            .filter(|w| w[1].l == w[0].l + 1)
            .map(|w| w[1].x.re - w[0].x.re)
            .collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        Some(gaps[gaps.len() / 2])
    }

    /// Re-evaluates every stored root from scratch.
    pub fn verify_residuals(&self) -> Result<()> {
        let bad = self.modes.par_iter().find_any(|m| {
            characteristic_value(m.pol, m.l, self.n0, m.x)
                .map(|f| f.norm() >= COLD_RESIDUAL)
                .unwrap_or(true)
        });
        match bad {
            Some(m) => Err(Error::Data(format!(
                "mode l={} j={} at {} is not a root (cold residual check)",
                m.l, m.j, m.x
            ))),
            None => Ok(()),
        }
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn pol(&self) -> Polarization {
        self.pol
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn max_width(&self) -> f64 {
        self.max_width
    }

    /// Representative spacing of consecutive least-leaky modes.
    pub fn fsr_x(&self) -> Option<f64> {
        self.fsr_x
    }

    pub(crate) fn fsr_or(&self, default: f64) -> f64 {
        self.fsr_x.unwrap_or(default)
    }

    /// Modes ordered by `(l, j)`.
    pub fn modes(&self) -> &[QnmMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Modes with `lo <= Re x <= hi`, in order of increasing `Re x`.
    pub fn modes_between(&self, lo: f64, hi: f64) -> impl Iterator<Item = &QnmMode> + '_ {
        let start = self.by_resonance.partition_point(|&i| self.modes[i].x.re < lo);
        self.by_resonance[start..]
            .iter()
            .map(move |&i| &self.modes[i])
            .take_while(move |m| m.x.re <= hi)
    }

    /// The j = 1 modes, in order of increasing `Re x`.
    pub fn least_leaky_modes(&self) -> Vec<QnmMode> {
        let mut v: Vec<QnmMode> = self.modes.iter().filter(|m| m.j == 1).copied().collect();
        v.sort_by(|a, b| a.x.re.total_cmp(&b.x.re));
        v
    }

    /// True if `[x - margin, x + margin]` lies inside the solved band. A band
    /// starting at 0 covers everything below.
    pub fn covers(&self, x: f64, margin: f64) -> bool {
        let low_ok = self.x_min == 0.0 || x - margin >= self.x_min;
        low_ok && x + margin <= self.x_max
    }
}

fn solve_range(
    pol: Polarization,
    n0: f64,
    x_min: f64,
    x_max: f64,
    max_width: f64,
    l_from: u32,
    l_to: u32,
) -> Result<Vec<QnmMode>> {
    let per_l: Vec<Vec<QnmMode>> = (l_from..=l_to)
        .into_par_iter()
        .map(|l| find_modes_in_band(pol, l, n0, x_min, x_max, max_width))
        .collect::<Result<_>>()?;
    Ok(per_l.into_iter().flatten().collect())
}

/// Flat on-disk form of a mode: `pol,l,j,re_x,im_x,width_x,k_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ModeRecord {
    pol: Polarization,
    l: u32,
    j: u32,
    re_x: f64,
    im_x: f64,
    width_x: f64,
    k_factor: f64,
}

impl TryFrom<&QnmMode> for ModeRecord {
    type Error = Error;

    fn try_from(m: &QnmMode) -> Result<Self> {
        if ![m.x.re, m.x.im, m.width_x, m.k_factor].iter().all(|v| v.is_finite()) {
            return Err(Error::Data(format!("mode l={} j={} has a non-finite field", m.l, m.j)));
        }
        Ok(Self {
            pol: m.pol,
            l: m.l,
            j: m.j,
            re_x: m.x.re,
            im_x: m.x.im,
            width_x: m.width_x,
            k_factor: m.k_factor,
        })
    }
}

impl TryFrom<ModeRecord> for QnmMode {
    type Error = Error;

    fn try_from(r: ModeRecord) -> Result<Self> {
        if r.width_x != 2.0 * r.im_x.abs() {
            return Err(Error::Data(format!(
                "mode l={} j={}: width_x {} != 2|im_x|",
                r.l, r.j, r.width_x
            )));
        }
        Ok(QnmMode {
            pol: r.pol,
            l: r.l,
            j: r.j,
            x: Complex::new(r.re_x, r.im_x),
            width_x: r.width_x,
            k_factor: r.k_factor,
        })
    }
}

pub fn write_modes_csv<W: Write>(out: W, modes: &[QnmMode]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in modes {
        w.serialize(ModeRecord::try_from(m)?)?;
    }
    if modes.is_empty() {
        w.write_record(["pol", "l", "j", "re_x", "im_x", "width_x", "k_factor"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_modes_csv<R: Read>(input: R) -> Result<Vec<QnmMode>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let expected = ["pol", "l", "j", "re_x", "im_x", "width_x", "k_factor"];
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Data(format!("unexpected mode table header {header:?}")));
    }
    r.deserialize::<ModeRecord>()
        .map(|rec| QnmMode::try_from(rec?))
        .collect()
}

pub fn write_modes_json<W: Write>(out: W, modes: &[QnmMode]) -> Result<()> {
    let records = modes.iter().map(ModeRecord::try_from).collect::<Result<Vec<_>>>()?;
    serde_json::to_writer_pretty(out, &records)?;
    Ok(())
}

pub fn read_modes_json<R: Read>(input: R) -> Result<Vec<QnmMode>> {
    let records: Vec<ModeRecord> = serde_json::from_reader(input)?;
    records.into_iter().map(QnmMode::try_from).collect()
}
