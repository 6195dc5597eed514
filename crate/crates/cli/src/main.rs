mod cache;
mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use droplet_qed::emission::{
    build_decay_curve, dos_spectrum, extract_local_field_factor, real_cavity_factor, write_dos_csv, write_dos_json,
    DecayCurve, Method,
};
use droplet_qed::qnm::{asymptotic_width, fsr_spacing, write_modes_csv, write_modes_json, ModeTable, Polarization};

use cache::CacheKey;
use config::{parse_config, render, validate, FsrMode, OutputFormat, RunConfig, XiMode};

/// Headroom above the sweep's largest x kept in every solved table, so that
/// modes just past the sweep still contribute their tails.
const TABLE_PAD_X: f64 = 10.0;
/// Half-width of the small table used only to measure the spacing.
const FSR_PROBE_X: f64 = 5.0;
const WIDTH_CAP_FACTOR: f64 = 1.2;
const FIG1_XI_FACTORS: [(f64, &str); 3] = [(1.0, "xi100"), (0.95, "xi095"), (0.90, "xi090")];

#[derive(Parser)]
#[command(name = "droplet-qed", version, about = "Microsphere resonances and surface-emitter decay rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (or load) the TE mode table covering the sweep and write it out.
    Modes(RunArgs),
    /// Sample the surface density of states over the sweep's x range.
    Dos {
        #[command(flatten)]
        run: RunArgs,
        /// Extra Lorentzian width added to every mode, in x units.
        #[arg(long, default_value_t = 0.0)]
        extra_width: f64,
    },
    /// Decay rate relative to bulk versus radius.
    DecayCurve {
        #[command(flatten)]
        run: RunArgs,
        /// Sweep a in [1, 20] um with 400 steps for three local-field factors.
        #[arg(long)]
        fig1: bool,
        /// Experimental data file to reference in the JSON metadata.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Print the resolved configuration as a config file.
    ShowConfig(RunArgs),
    /// Local-field factor implied by a large-radius rate g.
    ExtractLfc {
        #[arg(long)]
        g: f64,
        #[arg(long, default_value_t = 1.47)]
        n0: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long = "lambda0-nm")]
    lambda0_nm: Option<f64>,
    #[arg(long = "gamma-h-cm")]
    gamma_h_cm: Option<f64>,
    /// Dipole degrees of freedom.
    #[arg(long = "m")]
    dipole_dof: Option<u8>,
    #[arg(long = "tau0-ns")]
    tau0_ns: Option<f64>,
    /// `real-cavity` or an explicit value.
    #[arg(long)]
    xi: Option<XiMode>,
    /// `computed` or an explicit value in x units.
    #[arg(long)]
    fsr: Option<FsrMode>,
    #[arg(long = "a-min")]
    a_min: Option<f64>,
    #[arg(long = "a-max")]
    a_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// `closed_form` or `mode_sum`.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<OutputFormat>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { c.$field = v; })*
            };
        }
        set!(n0 => n0, lambda0_nm => lambda0_nm, gamma_h_cm => gamma_h_cm, dipole_dof => dipole_dof,
             tau0_ns => tau0_ns, xi => xi_mode, fsr => fsr_mode, a_min => a_min_um, a_max => a_max_um,
             steps => steps, method => method, format => output_format);
        if let Some(p) = &self.out {
            c.output_path = Some(p.clone());
        }
        validate(&c).context("config")?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Modes(args) => cmd_modes(&args.resolve()?),
        Command::Dos { run, extra_width } => cmd_dos(&run.resolve()?, extra_width),
        Command::DecayCurve { run, fig1, overlay } => cmd_decay_curve(run.resolve()?, fig1, overlay),
        Command::ShowConfig(args) => {
            print!("{}", render(&args.resolve()?));
            Ok(())
        }
        Command::ExtractLfc { g, n0 } => cmd_extract_lfc(g, n0),
    }
}

fn width_cap(n0: f64) -> Result<f64> {
    Ok(WIDTH_CAP_FACTOR * asymptotic_width(n0)?)
}

/// TE table from x = 0 to beyond the sweep's largest x.
fn sweep_table(c: &RunConfig) -> Result<ModeTable> {
    let x_max = c.emitter().alpha() * c.a_max_um + TABLE_PAD_X;
    let key = CacheKey::new(Polarization::TE, c.n0, 0.0, x_max, width_cap(c.n0)?);
    cache::table_for(key)
}

fn fsr_for(c: &RunConfig) -> Result<f64> {
    match c.fsr_mode {
        FsrMode::Explicit(v) => Ok(v),
        FsrMode::Computed => {
            let x_mid = c.emitter().alpha() * 0.5 * (c.a_min_um + c.a_max_um);
            let lo = (x_mid - FSR_PROBE_X).max(0.0);
            let key = CacheKey::new(Polarization::TE, c.n0, lo, x_mid + FSR_PROBE_X, width_cap(c.n0)?);
            let table = cache::table_for(key)?;
            Ok(fsr_spacing(&table, x_mid)?)
        }
    }
}

fn xi_for(c: &RunConfig) -> Result<f64> {
    match c.xi_mode {
        XiMode::RealCavity => Ok(real_cavity_factor(c.n0)?),
        XiMode::Explicit(v) => Ok(v),
    }
}

/// Writes through a buffered sink: the named file, or standard output.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Summaries go to stdout unless stdout carries the data.
fn report(c: &RunConfig, text: &str) {
    if c.output_path.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
}

fn cmd_modes(c: &RunConfig) -> Result<()> {
    let table = sweep_table(c).context("modes: solving table")?;
    emit(c.output_path.as_deref(), |w| {
        match c.output_format {
            OutputFormat::Csv => write_modes_csv(w, table.modes())?,
            OutputFormat::Json => write_modes_json(w, table.modes())?,
        }
        Ok(())
    })
    .context("modes: writing table")?;
    let fsr = table.fsr_x().map_or("n/a".to_string(), |d| format!("{d:.6}"));
    report(
        c,
        &format!(
            "modes: {}\nband: (0, {:.4}]\nfsr at band center: {fsr}\nasymptotic width: {:.6}",
            table.len(),
            table.x_max(),
            asymptotic_width(c.n0)?
        ),
    );
    Ok(())
}

fn cmd_dos(c: &RunConfig, extra_width: f64) -> Result<()> {
    let table = sweep_table(c).context("dos: solving table")?;
    let alpha = c.emitter().alpha();
    let (lo, hi) = (alpha * c.a_min_um, alpha * c.a_max_um);
    let xs: Vec<f64> = (0..=c.steps)
        .map(|i| if i == c.steps { hi } else { lo + (hi - lo) * i as f64 / c.steps as f64 })
        .collect();
    let spectrum = dos_spectrum(&table, &xs, extra_width).context("dos: evaluating")?;
    emit(c.output_path.as_deref(), |w| {
        match c.output_format {
            OutputFormat::Csv => write_dos_csv(w, &spectrum)?,
            OutputFormat::Json => write_dos_json(w, &spectrum)?,
        }
        Ok(())
    })
    .context("dos: writing spectrum")
}

fn write_curve(curve: &DecayCurve, path: Option<&Path>, format: OutputFormat) -> Result<()> {
    emit(path, |w| {
        match format {
            OutputFormat::Csv => curve.write_csv(w)?,
            OutputFormat::Json => curve.write_json(w)?,
        }
        Ok(())
    })
}

/// `dir/stem_tag.ext` for each preset member.
fn tagged_path(base: &Path, tag: &str) -> PathBuf {
    let stem = base.file_stem().map_or("fig1".into(), |s| s.to_string_lossy().into_owned());
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    base.with_file_name(name)
}

fn cmd_decay_curve(mut c: RunConfig, fig1: bool, overlay: Option<PathBuf>) -> Result<()> {
    if fig1 {
        c.a_min_um = 1.0;
        c.a_max_um = 20.0;
        c.steps = 400;
    }
    if overlay.is_some() && c.output_format == OutputFormat::Csv {
        log::warn!("--overlay is recorded in JSON output only");
    }
    let emitter = c.emitter();
    let fsr = fsr_for(&c).context("decay-curve: free spectral range")?;
    let table = match c.method {
        Method::ModeSum => Some(sweep_table(&c).context("decay-curve: solving table")?),
        Method::ClosedForm => None,
    };
    let n0 = table.as_ref().map_or(c.n0, |t| t.n0());
    let xi = xi_for(&c)?;
    let radii = c.radii();
    let runs: Vec<(f64, Option<PathBuf>)> = if fig1 {
        let ext = match c.output_format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let base = c.output_path.clone().unwrap_or_else(|| PathBuf::from(format!("fig1.{ext}")));
        FIG1_XI_FACTORS
            .iter()
            .map(|&(f, tag)| (f * xi, Some(tagged_path(&base, tag))))
            .collect()
    } else {
        vec![(xi, c.output_path.clone())]
    };
    for (xi_lc, path) in runs {
        let mut curve = build_decay_curve(&emitter, n0, &radii, xi_lc, fsr, c.method, table.as_ref())
            .with_context(|| format!("decay-curve: evaluating ({}, xi = {xi_lc})", c.method))?;
        curve.params.overlay = overlay.as_ref().map(|p| p.display().to_string());
        write_curve(&curve, path.as_deref(), c.output_format).context("decay-curve: writing curve")?;
        if let Some(p) = &path {
            println!("wrote {} ({} points, xi = {xi_lc:.6})", p.display(), curve.points.len());
        }
    }
    Ok(())
}

fn cmd_extract_lfc(g: f64, n0: f64) -> Result<()> {
    let xi = extract_local_field_factor(g, n0).context("extract-lfc")?;
    let xi_rc = real_cavity_factor(n0).context("extract-lfc")?;
    println!("xi = {xi:.6}");
    println!("xi_real_cavity = {xi_rc:.6}");
    println!("ratio = {:.6}", xi / xi_rc);
    Ok(())
}
