mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use factorcount::simulate::{generate_panel, CountStudyConfig, DgpSpec, Model, Population};
use factorcount::M0Mode;

use commands::{Emit, EstimateArgs, NoiseBenchArgs, Output, SimulateArgs};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "factorcount",
    version,
    about = "Estimate the number of factors in a panel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run PC and PC* criteria on a panel file (rows = series).
    Estimate(EstimateCmd),
    /// Monte Carlo factor-count study.
    Simulate(SimulateCmd),
    /// Compare noise-variance estimators on Models 1 and 2.
    NoiseBench(NoiseBenchCmd),
    /// Write one simulated panel as CSV.
    Generate(GenerateCmd),
}

#[derive(Args)]
struct GenerateCmd {
    #[arg(long, value_parser = parse_model, default_value = "M3")]
    model: Model,

    #[arg(long, value_parser = parse_population, default_value = "gaussian")]
    population: Population,

    #[arg(long)]
    n: usize,

    #[arg(long)]
    t: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Destination CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OutputOpts {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "csv,json,plotdata"
    )]
    emit: Vec<Emit>,
}

impl OutputOpts {
    fn output(&self) -> Output {
        Output {
            dir: self.out.clone(),
            emit: self.emit.clone(),
        }
    }
}

#[derive(Args)]
struct EstimateCmd {
    #[arg(long, required = true)]
    input: Option<PathBuf>,

    /// Fixed maximum number of factors (repeatable).
    #[arg(long)]
    m0: Vec<usize>,

    /// m₀ as a fraction of N (repeatable); defaults to 0.6, 0.7 and 0.8.
    #[arg(long = "m0-frac")]
    m0_frac: Vec<f64>,

    /// File of `r,omega` lines describing the noise spectrum.
    #[arg(long)]
    h_spectrum: Option<PathBuf>,

    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    q: Option<u8>,

    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,

    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct SimulateCmd {
    #[arg(long, value_parser = parse_model, default_value = "M3")]
    model: Model,

    #[arg(long, value_parser = parse_population, default_value = "gaussian")]
    population: Population,

    /// Grid cell as NxT (repeatable); defaults to the full study grid.
    #[arg(long, value_parser = parse_cell)]
    grid: Vec<(usize, usize)>,

    #[arg(long, default_value_t = 8)]
    m0: usize,

    #[arg(long, default_value_t = 200)]
    reps: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Noise spectrum handed to PC*; defaults to the model's own.
    #[arg(long)]
    h_spectrum: Option<PathBuf>,

    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct NoiseBenchCmd {
    #[arg(long, value_parser = parse_model, value_delimiter = ',', default_value = "M1,M2")]
    model: Vec<Model>,

    #[arg(
        long,
        value_parser = parse_population,
        value_delimiter = ',',
        default_value = "gaussian,gamma"
    )]
    population: Vec<Population>,

    #[arg(long, value_delimiter = ',', default_value = "0.5,1.5")]
    c: Vec<f64>,

    /// Comma-separated N values replacing the default grids.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,

    #[arg(long, default_value_t = 200)]
    reps: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[command(flatten)]
    output: OutputOpts,
}

fn parse_model(s: &str) -> Result<Model, String> {
    match s.to_ascii_uppercase().trim_start_matches("MODEL") {
        "M1" | "1" => Ok(Model::M1),
        "M2" | "2" => Ok(Model::M2),
        "M3" | "3" => Ok(Model::M3),
        "M4" | "4" => Ok(Model::M4),
        "M5" | "5" => Ok(Model::M5),
        _ => Err(format!("unknown model {s:?} (expected M1..M5)")),
    }
}

fn parse_population(s: &str) -> Result<Population, String> {
    match s.to_ascii_lowercase().as_str() {
        "gaussian" | "normal" => Ok(Population::Gaussian),
        "gamma" => Ok(Population::Gamma),
        _ => Err(format!(
            "unknown population {s:?} (expected gaussian or gamma)"
        )),
    }
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (n, t) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid cell {s:?} is not of the form NxT"))?;
    let n = n.trim().parse().map_err(|_| format!("bad N in {s:?}"))?;
    let t = t.trim().parse().map_err(|_| format!("bad T in {s:?}"))?;
    Ok((n, t))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FACTORCOUNT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "FACTORCOUNT_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Estimate(cmd) => {
            let input = cmd
                .input
                .ok_or_else(|| CliError::Usage("--input is required".into()))?;
            let mut m0: Vec<M0Mode> = cmd.m0.iter().map(|&k| M0Mode::Fixed(k)).collect();
            for &f in &cmd.m0_frac {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(CliError::Usage(format!(
                        "--m0-frac must lie in (0, 1], got {f}"
                    )));
                }
                m0.push(M0Mode::Fraction(f));
            }
            if m0.is_empty() {
                m0 = [0.6, 0.7, 0.8].map(M0Mode::Fraction).to_vec();
            }
            let args = EstimateArgs {
                input,
                m0,
                nonspikes: commands::nonspikes(cmd.h_spectrum.as_deref())?,
                moments: commands::moments(cmd.q, cmd.beta)?,
            };
            commands::estimate(&args, &cmd.output.output())
        }
        Command::Simulate(cmd) => {
            let grid = if cmd.grid.is_empty() {
                CountStudyConfig::paper_grid()
            } else {
                cmd.grid
            };
            let nonspikes = match cmd.h_spectrum {
                Some(p) => Some(io::read_noise_spectrum(&p)?),
                None => None,
            };
            let args = SimulateArgs {
                model: cmd.model,
                population: cmd.population,
                grid,
                m0: cmd.m0,
                reps: cmd.reps,
                seed: cmd.seed,
                nonspikes,
            };
            commands::simulate(&args, &cmd.output.output())
        }
        Command::NoiseBench(cmd) => {
            let args = NoiseBenchArgs {
                models: cmd.model,
                populations: cmd.population,
                c: cmd.c,
                n_grid: cmd.n_grid,
                reps: cmd.reps,
                seed: cmd.seed,
            };
            commands::noise_bench(&args, &cmd.output.output())
        }
        Command::Generate(cmd) => {
            let spec = DgpSpec::new(cmd.model, cmd.population, cmd.n, cmd.t, cmd.seed);
            let panel = generate_panel(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
            io::write_csv(&panel, &cmd.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
