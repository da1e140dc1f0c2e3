//! `itd`: simulate, calibrate, fit, estimate and sweep from the command line.
//!
//! Every subcommand accepts `--config`, `--seed` and `--out`; without `--out`
//! the artifact goes to stdout. Outputs are byte-identical for identical
//! inputs and seed.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use itd_core::estimation::{run_estimator, FilterKind, MeasurementKind};
use itd_core::identification::{density_from_mass, fit_thermal_params, FitProblem, FitReport};
use itd_core::impedance::{fit_admittance_poly, AdmittancePoly};
use itd_core::io::{
    generate_drive_cycle, load_calibration, load_json, load_telemetry, synthesize_telemetry,
    write_sweep, write_telemetry, write_trace, AppConfig,
};
use itd_core::reference::{frequency_sweep, log_grid};
use itd_core::{Error, Exec, ThermalParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Offset between the drive-cycle seed and the noise seed of `simulate`.
pub const NOISE_SEED_OFFSET: u64 = 1000;

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the finite-volume oracle over a synthetic drive cycle and write telemetry CSV.
    Simulate {
        /// Cell parameters (JSON, raw or a fit report); defaults to the reference 26650 cell.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Admittance calibration (JSON); defaults to the built-in curve.
        #[arg(long)]
        poly: Option<PathBuf>,
    },
    /// Fit the admittance polynomial to a calibration CSV and write it as JSON.
    Calibrate {
        /// CSV with columns temp_c, adm_real.
        #[arg(long)]
        input: PathBuf,
    },
    /// Identify thermal parameters from telemetry with both truth channels.
    Fit {
        #[arg(long)]
        telemetry: PathBuf,
        /// Starting point; defaults to the reference initial guess.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run a Kalman estimator over telemetry and write the trace CSV.
    Estimate {
        #[arg(long)]
        telemetry: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Required by the admittance filters (ekf, dekf).
        #[arg(long)]
        poly: Option<PathBuf>,
        /// ekf, dekf, kf or dkf; defaults to the configured filter.
        #[arg(long)]
        filter: Option<FilterKind>,
    },
    /// Analytical, PA and QA transfer matrices over a log frequency grid.
    Freqresp {
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "itd",
    version,
    about = "Impedance-based internal temperature estimation"
)]
struct Invocation {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Parameter files hold either bare parameters or a whole fit report.
#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Report(FitReport),
    Params(ThermalParams),
}

/// Names the file in I/O and JSON errors, which otherwise omit it.
fn at<T>(path: &Path, r: itd_core::Result<T>) -> itd_core::Result<T> {
    r.map_err(|e| match e {
        Error::Io(_) | Error::Json(_) => Error::Input(format!("{}: {e}", path.display())),
        e => e,
    })
}

fn load_params(path: &Path) -> itd_core::Result<ThermalParams> {
    Ok(match at(path, load_json::<ParamsFile>(path))? {
        ParamsFile::Report(r) => r.params,
        ParamsFile::Params(p) => p,
    })
}

fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_numerical() => EXIT_NUMERICAL,
        Error::Configuration(_) | Error::Toml(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn open_out(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> itd_core::Result<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn run(inv: Invocation) -> itd_core::Result<()> {
    let Common { config, seed, out } = inv.common;
    let cfg = match &config {
        Some(p) => at(p, AppConfig::load(p))?,
        None => AppConfig::default(),
    };
    let out = out.as_deref();
    match inv.command {
        Command::Simulate { params, poly } => {
            let params = match params {
                Some(p) => load_params(&p)?,
                None => ThermalParams::reference_26650(),
            };
            let poly = match poly {
                Some(p) => at(&p, load_json(&p))?,
                None => AdmittancePoly::default_calibration(),
            };
            let cycle = generate_drive_cycle(&cfg.cycle, seed)?;
            let records = synthesize_telemetry(
                &cycle,
                &params,
                &poly,
                cfg.noise,
                seed.wrapping_add(NOISE_SEED_OFFSET),
                &cfg.plant,
            )?;
            log::info!("simulated {} records", records.len());
            let mut w = open_out(out)?;
            write_telemetry(&mut w, &records)?;
            w.flush()?;
        }
        Command::Calibrate { input } => {
            let samples = at(&input, load_calibration(&input))?;
            let fit = fit_admittance_poly(&samples, cfg.calibration_freq_hz)?;
            log::info!("calibration residual rms {:e} S", fit.residual_rms);
            write_json(out, &fit.poly)?;
        }
        Command::Fit { telemetry, params } => {
            let records = at(&telemetry, load_telemetry(&telemetry))?;
            let mut guess = match params {
                Some(p) => load_params(&p)?,
                None => ThermalParams::initial_guess_26650(),
            };
            if let Some(m) = cfg.fit.mass_kg {
                guess = guess.with_rho(density_from_mass(m, &guess)?)?;
            }
            let mut problem = FitProblem::new(&records, guess, cfg.plant.u_ocv);
            problem.free_params = cfg.fit.free_params.clone();
            problem.bounds = cfg.fit.bounds;
            problem.options.max_iter = cfg.fit.max_iter;
            problem.options.xtol = cfg.fit.xtol;
            let (_, report) = fit_thermal_params(&problem)?;
            log::info!(
                "fit rmse core {:.4} surface {:.4} after {} iterations",
                report.rmse_core,
                report.rmse_surf,
                report.iterations
            );
            write_json(out, &report)?;
        }
        Command::Estimate {
            telemetry,
            params,
            poly,
            filter,
        } => {
            let est = cfg.estimator_for(filter)?;
            let params = load_params(&params)?;
            let poly: Option<AdmittancePoly> = match poly {
                Some(p) => Some(at(&p, load_json(&p))?),
                None => None,
            };
            if est.measurement_kind == MeasurementKind::Admittance && poly.is_none() {
                return Err(Error::Configuration(format!(
                    "`{}` needs --poly",
                    FilterKind::of(&est)
                )));
            }
            let records = at(&telemetry, load_telemetry(&telemetry))?;
            let trace = run_estimator(&records, &est, &params, poly.as_ref(), cfg.plant.u_ocv)?;
            let mut w = open_out(out)?;
            write_trace(&mut w, &trace, &records)?;
            w.flush()?;
        }
        Command::Freqresp { params } => {
            let params = match params {
                Some(p) => load_params(&p)?,
                None => ThermalParams::reference_26650(),
            };
            let s = cfg.sweep;
            let freqs = log_grid(s.f_min_hz, s.f_max_hz, s.points_per_decade);
            let points = frequency_sweep(&params, &freqs, Exec::default());
            let mut w = open_out(out)?;
            write_sweep(&mut w, &points)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Errors are reported on stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match Invocation::try_parse_from(argv) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(inv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_USAGE {
                eprintln!("usage error: {e}");
            } else {
                eprintln!("error: {e}");
            }
            code
        }
    }
}
