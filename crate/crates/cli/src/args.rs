//! Command-line definitions.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use adfilter::channels::damping_probability;
use adfilter::gates::BellLabel;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_list, parse_mode, parse_povm, ExperimentConfig, Overrides, Scheme, DEFAULT_SEED};
use crate::output::{write_csv, write_json, write_report};
use crate::sweep::{cmd_bell_demo, run_sweep};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "adfilter", version, about = "Sweeps of the amplitude-damping reversal filter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cold-mode sweep through both realizations
    Ideal(SweepArgs),
    /// Scheme A over a list of mean phonon numbers
    SchemeA(SweepArgs),
    /// Scheme B over a list of mean phonon numbers
    SchemeB(SweepArgs),
    /// Damp and filter a single Bell state
    BellDemo(BellArgs),
}

#[derive(Debug, Default, Args)]
pub struct SweepArgs {
    /// T1 in seconds
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    /// Number of t/T1 grid points
    #[arg(long)]
    pub points: Option<usize>,
    /// Smallest t/T1
    #[arg(long, allow_hyphen_values = true)]
    pub tmin: Option<f64>,
    /// Largest t/T1
    #[arg(long, allow_hyphen_values = true)]
    pub tmax: Option<f64>,
    /// Comma-separated mean phonon numbers
    #[arg(long, allow_hyphen_values = true)]
    pub nbar: Option<String>,
    /// Fock cutoff of the shared mode (scheme A)
    #[arg(long)]
    pub nmax: Option<usize>,
    /// scale_zz_only or scale_all (scheme B)
    #[arg(long)]
    pub mode: Option<String>,
    /// circuit or paper
    #[arg(long)]
    pub povm: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout if omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key = value settings file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write JSON instead of CSV
    #[arg(long)]
    pub json: bool,
}

impl SweepArgs {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let flags = Overrides {
            t1: self.t1,
            points: self.points,
            tmin: self.tmin,
            tmax: self.tmax,
            nbar: self.nbar.as_deref().map(parse_list).transpose()?,
            n_max: self.nmax,
            mode: self.mode.as_deref().map(parse_mode).transpose()?,
            povm: self.povm.as_deref().map(parse_povm).transpose()?,
            seed: self.seed,
            out: self.out.clone(),
            json: self.json.then_some(true),
        };
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        Ok(file.layered(flags))
    }
}

#[derive(Debug, Args)]
pub struct BellArgs {
    /// phi+, phi-, psi+ or psi-
    #[arg(long, default_value = "psi-")]
    pub state: String,
    /// Decay probability
    #[arg(long, conflicts_with = "t_over_t1", allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Elapsed time in units of T1
    #[arg(long)]
    pub t_over_t1: Option<f64>,
    #[arg(long)]
    pub povm: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

/// Parses `args` and runs the command, writing to `--out` or `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Ideal(a) => sweep(Scheme::Ideal, &a, stdout),
        Command::SchemeA(a) => sweep(Scheme::A, &a, stdout),
        Command::SchemeB(a) => sweep(Scheme::B, &a, stdout),
        Command::BellDemo(a) => bell(&a, stdout),
    }
}

fn sweep(scheme: Scheme, args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ExperimentConfig::resolve(scheme, &args.overrides()?)?;
    let records = run_sweep(&cfg)?;
    emit(cfg.output_path.as_ref(), stdout, |w| if cfg.json { write_json(&records, w) } else { write_csv(&records, w) })
}

fn bell(args: &BellArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let label: BellLabel =
        args.state.parse().map_err(|_| CliError::Config(format!("unknown Bell state `{}`", args.state)))?;
    let p = match (args.p, args.t_over_t1) {
        (Some(p), _) => p,
        (None, Some(t)) => damping_probability(t, 1.0).map_err(|e| CliError::Config(e.to_string()))?,
        (None, None) => return Err(CliError::Config("bell-demo needs --p or --t-over-t1".into())),
    };
    let povm = args.povm.as_deref().map(parse_povm).transpose()?.unwrap_or_default();
    let report = cmd_bell_demo(label, p, povm, args.seed.unwrap_or(DEFAULT_SEED))?;
    emit(args.out.as_ref(), stdout, |w| if args.json { write_json(&report, w) } else { write_report(&report, w) })
}

fn emit(
    path: Option<&PathBuf>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match path {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            body(stdout)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
