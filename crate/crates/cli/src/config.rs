//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use droplet_qed::emission::{EmitterSpec, Method};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiMode {
    RealCavity,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FsrMode {
    Computed,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n0: f64,
    pub lambda0_nm: f64,
    pub gamma_h_cm: f64,
    pub dipole_dof: u8,
    pub tau0_ns: f64,
    pub xi_mode: XiMode,
    pub fsr_mode: FsrMode,
    pub a_min_um: f64,
    pub a_max_um: f64,
    /// Number of intervals; the sweep has `steps + 1` radii.
    pub steps: usize,
    pub method: Method,
    /// `None` writes to standard output.
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n0: 1.47,
            lambda0_nm: 560.0,
            gamma_h_cm: 50.0,
            dipole_dof: 2,
            tau0_ns: 1.0,
            xi_mode: XiMode::RealCavity,
            fsr_mode: FsrMode::Computed,
            a_min_um: 1.0,
            a_max_um: 20.0,
            steps: 400,
            method: Method::ClosedForm,
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

impl FromStr for XiMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "real_cavity" | "real-cavity" => Ok(XiMode::RealCavity),
            v => v
                .parse()
                .map(XiMode::Explicit)
                .map_err(|_| format!("expected real-cavity or a number, got {v:?}")),
        }
    }
}

impl FromStr for FsrMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "computed" => Ok(FsrMode::Computed),
            v => v
                .parse()
                .map(FsrMode::Explicit)
                .map_err(|_| format!("expected computed or a number, got {v:?}")),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            v => Err(format!("expected csv or json, got {v:?}")),
        }
    }
}

fn value<T: FromStr>(raw: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::Parse {
        line,
        message: e.to_string(),
    })
}

/// Parses a config document on top of the defaults and validates the result.
pub fn parse_config(source: &str) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig::default();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (key, val) = text.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected key = value, got {text:?}"),
        })?;
        let (key, val) = (key.trim(), val.trim());
        match key {
            "n0" => c.n0 = value(val, line)?,
            "lambda0_nm" => c.lambda0_nm = value(val, line)?,
            "gamma_h_cm" => c.gamma_h_cm = value(val, line)?,
            "dipole_dof" | "m" => c.dipole_dof = value(val, line)?,
            "tau0_ns" => c.tau0_ns = value(val, line)?,
            "xi" => c.xi_mode = value(val, line)?,
            "fsr" => c.fsr_mode = value(val, line)?,
            "a_min_um" => c.a_min_um = value(val, line)?,
            "a_max_um" => c.a_max_um = value(val, line)?,
            "steps" => c.steps = value(val, line)?,
            "method" => c.method = value(val, line)?,
            "output_path" => c.output_path = (!val.is_empty()).then(|| PathBuf::from(val)),
            "output_format" => c.output_format = value(val, line)?,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key {other:?}"),
                })
            }
        }
    }
    validate(&c)?;
    Ok(c)
}

pub fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    let bad = |field, message: String| Err(ConfigError::Validation { field, message });
    if !(c.n0 > 1.0 && c.n0.is_finite()) {
        return bad("n0", format!("must exceed 1, got {}", c.n0));
    }
    if let Err(e) = EmitterSpec::new(c.lambda0_nm, c.gamma_h_cm, c.dipole_dof, c.tau0_ns) {
        let field = if !(c.lambda0_nm > 0.0 && c.lambda0_nm.is_finite()) {
            "lambda0_nm"
        } else if !(c.gamma_h_cm >= 0.0 && c.gamma_h_cm.is_finite()) {
            "gamma_h_cm"
        } else if !(1..=3).contains(&c.dipole_dof) {
            "dipole_dof"
        } else {
            "tau0_ns"
        };
        return bad(field, e.to_string());
    }
    if let XiMode::Explicit(v) = c.xi_mode {
        if !(v > 0.0 && v.is_finite()) {
            return bad("xi", format!("must be positive, got {v}"));
        }
    }
    if let FsrMode::Explicit(v) = c.fsr_mode {
        if !(v > 0.0 && v.is_finite()) {
            return bad("fsr", format!("must be positive, got {v}"));
        }
    }
    if !(c.a_min_um > 0.0) {
        return bad("a_min_um", format!("must be positive, got {}", c.a_min_um));
    }
    if !(c.a_max_um > c.a_min_um && c.a_max_um < 1e4) {
        return bad("a_max_um", format!("must lie in (a_min_um, 1e4), got {}", c.a_max_um));
    }
    if c.steps < 1 {
        return bad("steps", "must be at least 1".into());
    }
    Ok(())
}

/// Writes every field, so that parsing the text gives back `c`.
pub fn render(c: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n0 = {}", c.n0);
    let _ = writeln!(s, "lambda0_nm = {}", c.lambda0_nm);
    let _ = writeln!(s, "gamma_h_cm = {}", c.gamma_h_cm);
    let _ = writeln!(s, "dipole_dof = {}", c.dipole_dof);
    let _ = writeln!(s, "tau0_ns = {}", c.tau0_ns);
    let _ = match c.xi_mode {
        XiMode::RealCavity => writeln!(s, "xi = real_cavity"),
        XiMode::Explicit(v) => writeln!(s, "xi = {v}"),
    };
    let _ = match c.fsr_mode {
        FsrMode::Computed => writeln!(s, "fsr = computed"),
        FsrMode::Explicit(v) => writeln!(s, "fsr = {v}"),
    };
    let _ = writeln!(s, "a_min_um = {}", c.a_min_um);
    let _ = writeln!(s, "a_max_um = {}", c.a_max_um);
    let _ = writeln!(s, "steps = {}", c.steps);
    let _ = writeln!(s, "method = {}", c.method);
    if let Some(p) = &c.output_path {
        let _ = writeln!(s, "output_path = {}", p.display());
    }
    let _ = writeln!(
        s,
        "output_format = {}",
        match c.output_format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    );
    s
}

impl RunConfig {
    pub fn emitter(&self) -> EmitterSpec {
        EmitterSpec::new(self.lambda0_nm, self.gamma_h_cm, self.dipole_dof, self.tau0_ns)
            .expect("validated config")
    }

    /// Sweep radii, both ends included.
    pub fn radii(&self) -> Vec<f64> {
        let span = self.a_max_um - self.a_min_um;
        (0..=self.steps)
            .map(|i| {
                if i == self.steps {
                    self.a_max_um
                } else {
                    self.a_min_um + span * i as f64 / self.steps as f64
                }
            })
            .collect()
    }
}
