//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::force::{baseline_from_frames, estimate_force};
use crate::io::{self, pa_to_kpa_text, ConfigFile};
use crate::pipeline::calibrate;
use crate::sim::{PressureSchedule, SimSkin};
use crate::validation::{run_validation, TrialSpec};

/// Environment variable that overrides the configured simulator seed.
pub const SEED_ENV: &str = "TAXEL_CALIB_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "taxel-calib",
    version,
    about = "Calibrate capacitive tactile skins and estimate normal force"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a pressure sweep over a synthetic skin.
    Simulate(SimulateArgs),
    /// Fit per-taxel pressure models from a sweep.
    Calibrate(CalibrateArgs),
    /// Average rest frames into a baseline.
    Baseline(BaselineArgs),
    /// Estimate total normal force for each frame.
    Estimate(EstimateArgs),
    /// Run known-mass trials against a simulated skin.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML config with [skin] and [schedule] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pressure levels as start:end:step in kPa.
    #[arg(long)]
    levels: Option<String>,
    /// Samples per pressure level.
    #[arg(long)]
    dwell: Option<usize>,
    /// Reading noise standard deviation in counts.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    dead_fraction: Option<f64>,
    /// Sweep CSV to write.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Ground-truth sidecar to write (default: next to the sweep).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write this many rest frames.
    #[arg(long, default_value_t = 0)]
    rest_frames: usize,
    /// Where to write the rest frames.
    #[arg(long, default_value = "rest.csv")]
    rest_out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    sweep: PathBuf,
    /// TOML config with a [calibration] section.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    amplitude_threshold: Option<u8>,
    #[arg(long)]
    activation_threshold: Option<u8>,
    #[arg(long)]
    bin_width_kpa: Option<f64>,
    /// Taxel area in m².
    #[arg(long)]
    taxel_area: Option<f64>,
    #[arg(long)]
    taxels_per_triangle: Option<usize>,
    /// Model file to write.
    #[arg(long, default_value = "skin.model")]
    model: PathBuf,
    /// Directory for the calibration report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include per-taxel SVG plots in the report.
    #[arg(long)]
    plots: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// Frames CSV recorded at rest.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, default_value = "baseline.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    frames: PathBuf,
    /// Also write a full-precision force table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Ground-truth sidecar written by `simulate`.
    #[arg(long)]
    truth: PathBuf,
    /// Masses in kg, as start:end:step or a comma list.
    #[arg(long, default_value = "0.2:1.0:0.2")]
    masses: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 30)]
    patch_size: usize,
    #[arg(long, default_value_t = 16)]
    baseline_frames: usize,
    /// Seed for trial noise and patch placement (default: derived from the truth file).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the per-trial table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the tool with `args` (including the program name) and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Baseline(a) => baseline(a),
        Command::Estimate(a) => estimate(a),
        Command::Validate(a) => validate(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("{SEED_ENV}=`{v}` is not an integer seed"))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Inclusive `start:end:step` range, or a comma-separated list.
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse range `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
            return Err(bad());
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
            .collect())
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let mut skin_config = config.skin.clone();
    if let Some(seed) = a.seed.or(env_seed()?) {
        skin_config.seed = seed;
    }
    if let Some(noise) = a.noise {
        skin_config.noise_sigma = noise;
    }
    if let Some(f) = a.dead_fraction {
        skin_config.dead_fraction = f;
    }
    let dwell = a.dwell.unwrap_or(config.schedule.dwell);
    let schedule = match &a.levels {
        Some(levels) => PressureSchedule::new(
            parse_range(levels)?
                .into_iter()
                .map(|kpa| kpa * 1000.0)
                .collect(),
            dwell,
        )?,
        None => {
            let mut s = config.schedule.clone();
            s.dwell = dwell;
            s.to_schedule()?
        }
    };

    let mut skin = SimSkin::from_config(&skin_config)?;
    let dataset = skin.generate_sweep(&schedule)?;
    io::write_sweep_csv(&dataset, &a.out)?;
    let truth = a
        .truth
        .clone()
        .unwrap_or_else(|| a.out.with_extension("truth.toml"));
    io::write_truth_file(&skin, &truth)?;
    if a.rest_frames > 0 {
        let frames = (0..a.rest_frames)
            .map(|_| skin.sample_frame(0.0).map(|s| s.frame))
            .collect::<Result<Vec<_>>>()?;
        io::write_frames_csv(skin.geometry().n_taxels(), &frames, &a.rest_out)?;
    }
    println!(
        "wrote {} samples x {} taxels to {} (ground truth: {}, {} dead taxels)",
        dataset.len(),
        skin.geometry().n_taxels(),
        a.out.display(),
        truth.display(),
        skin.dead_taxels().len()
    );
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let file = load_config(a.config.as_deref())?;
    let mut section = file.calibration.clone();
    if let Some(v) = a.amplitude_threshold {
        section.amplitude_threshold = v;
    }
    if let Some(v) = a.activation_threshold {
        section.activation_threshold = v;
    }
    if let Some(v) = a.bin_width_kpa {
        section.pressure_bin_width_kpa = v;
    }
    if let Some(v) = a.taxel_area {
        section.taxel_area_m2 = v;
    }
    if let Some(v) = a.taxels_per_triangle {
        section.taxels_per_triangle = v;
    }
    let config = section.to_config()?;
    let dataset = io::parse_sweep_csv_with(&a.sweep, &section.layout())?;
    let model = calibrate(&dataset, &config)?;
    io::write_model_file(&model, &a.model)?;
    if let Some(dir) = &a.report {
        io::write_report(&model, &dataset, &config, dir, a.plots)?;
    }
    println!(
        "calibrated {} taxels: {} fitted, {} excluded -> {}",
        model.geometry().n_taxels(),
        model.n_fitted(),
        model.n_excluded(),
        a.model.display()
    );
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let frames = io::parse_frames_csv(&a.frames)?;
    let base = baseline_from_frames(&frames)?;
    io::write_frames_csv(base.len(), std::slice::from_ref(&base), &a.out)?;
    println!(
        "baseline from {} frames -> {}",
        frames.len(),
        a.out.display()
    );
    Ok(())
}

fn load_baseline(path: &Path) -> Result<crate::types::BaselineFrame> {
    let mut frames = io::parse_frames_csv(path)?;
    match frames.len() {
        1 => Ok(frames.remove(0)),
        n => Err(Error::Format {
            path: path.to_path_buf(),
            line: 2,
            message: format!("baseline file must hold exactly one frame, found {n}"),
        }),
    }
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let model = io::load_model_file(&a.model)?;
    let base = load_baseline(&a.baseline)?;
    let frames = io::parse_frames_csv(&a.frames)?;
    let mut table = String::from("frame,total_force_n,n_activated,n_clamped\n");
    for (i, frame) in frames.iter().enumerate() {
        let est = estimate_force(frame, &base, &model)?;
        println!(
            "frame {i}: total force {:.3} N ({} activated, {} clamped)",
            est.total_force,
            est.n_activated,
            est.clamped.len()
        );
        let _ = writeln!(
            table,
            "{i},{},{},{}",
            est.total_force,
            est.n_activated,
            est.clamped.len()
        );
    }
    if let Some(out) = &a.out {
        io::write_atomic(out, table.as_bytes())?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let model = io::load_model_file(&a.model)?;
    let mut skin = io::load_truth_file(&a.truth)?;
    let seed = match a.seed.or(env_seed()?) {
        Some(s) => s,
        None => skin.seed().wrapping_add(1),
    };
    skin.reseed(seed);
    let spec = TrialSpec {
        masses: parse_range(&a.masses)?,
        trials: a.trials,
        patch_size: a.patch_size,
        baseline_frames: a.baseline_frames,
        seed,
    };
    let report = run_validation(&mut skin, &model, &spec)?;

    let mut table = String::from("trial,mass_kg,patch_start,true_force_n,estimated_force_n,relative_error,n_activated,n_clamped\n");
    println!("trial  mass(kg)  patch      true(N)  estimated(N)  error(%)");
    for (i, t) in report.trials.iter().enumerate() {
        println!(
            "{i:5}  {:8.3}  {:3}-{:<3}  {:9.4}  {:12.4}  {:8.2}",
            t.mass,
            t.patch_start,
            t.patch_start + spec.patch_size - 1,
            t.true_force,
            t.estimated_force,
            100.0 * t.relative_error()
        );
        let _ = writeln!(
            table,
            "{i},{},{},{},{},{},{},{}",
            t.mass,
            t.patch_start,
            t.true_force,
            t.estimated_force,
            t.relative_error(),
            t.n_activated,
            t.n_clamped
        );
    }
    println!(
        "mean relative error: {:.2}% over {} trials (max {:.2}%, taxel area {} m^2, peak patch pressure {} kPa)",
        100.0 * report.mean_relative_error(),
        report.trials.len(),
        100.0 * report.max_relative_error(),
        model.geometry().taxel_area(),
        pa_to_kpa_text(
            spec.masses.iter().fold(0.0_f64, |m, &x| m.max(x)) * crate::sim::GRAVITY
                / (spec.patch_size as f64 * model.geometry().taxel_area())
        ),
    );
    if let Some(out) = &a.out {
        io::write_atomic(out, table.as_bytes())?;
    }
    Ok(())
}
