mod commands;
mod io;
mod manifest;

use clap::{Parser, Subcommand, ValueEnum};
use commands::Output;
use isomono::fuchsian::Sign;
use isomono::transport::{DEFAULT_TOL_MON, DEFAULT_TOL_ODE};
use isomono::Complex64;
use manifest::{FileDigest, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("{}", named(.0))]
    Numerical(#[from] isomono::Error),
}

/// The message, prefixed with the error kind unless it already starts with it.
fn named(e: &isomono::Error) -> String {
    let msg = e.to_string();
    if msg.starts_with(e.kind()) {
        msg
    } else {
        format!("{}: {msg}", e.kind())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(e) if e.is_input_error() => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "isomono", version, about = "Isomonodromic deformations of 2x2 Fuchsian systems", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input file (system JSON; sov JSON for `reconstruct`)
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; stdout if absent. The run manifest goes next to it.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_ODE)]
    tol_ode: f64,
    /// Overrides the tol_alg stored in the input
    #[arg(long, global = true)]
    tol_alg: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_MON)]
    tol_mon: f64,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monodromy base point as `re,im`
    #[arg(long, global = true, value_parser = io::parse_complex)]
    base: Option<Complex64>,
    /// JSON polyline file
    #[arg(long, global = true)]
    path: Option<PathBuf>,
    /// Print the six cross-ratio orbit values of `re,im` (or `inf`)
    #[arg(long, global = true)]
    orbit: Option<String>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Dir {
    #[value(alias = "+")]
    Plus,
    #[value(alias = "-")]
    Minus,
}

impl From<Dir> for Sign {
    fn from(d: Dir) -> Sign {
        match d {
            Dir::Plus => Sign::Plus,
            Dir::Minus => Sign::Minus,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check trace, eigenvalue, residue-sum, resonance and stability conditions
    Validate,
    /// Monodromy generators at every marked point (CSV)
    Monodromy,
    /// Schlesinger flow along the polylines of --path (CSV)
    Flow,
    /// Separated variables (JSON)
    Sov,
    /// Spectral curve coefficients (CSV)
    Spectral,
    /// Residues from separated variables (system JSON)
    Reconstruct {
        /// Pole positions and lambdas; a system file works
        #[arg(long)]
        poles: PathBuf,
    },
    /// Paired Hecke modification: eigenvalue table and trace comparison (CSV)
    Hecke {
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, value_enum, default_value_t = Dir::Plus)]
        dir_i: Dir,
        #[arg(long, value_enum, default_value_t = Dir::Plus)]
        dir_j: Dir,
        #[arg(long)]
        same_point: bool,
    },
    /// PVI trajectory (x, p) in t along --path, or the orbit table with --orbit (CSV)
    Pvi {
        /// alpha,beta,gamma,delta; adds the PVI residual columns
        #[arg(long)]
        pvi_params: Option<String>,
    },
    /// Seeded random valid system (system JSON)
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        lambda_min: f64,
        #[arg(long, default_value_t = 0.45)]
        lambda_max: f64,
    },
}

/// Flags shared by every subcommand.
pub struct Settings {
    pub input: Option<PathBuf>,
    pub path: Option<PathBuf>,
    pub tol_ode: f64,
    pub tol_alg: Option<f64>,
    pub tol_mon: f64,
    pub base: Option<Complex64>,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Monodromy => "monodromy",
        Command::Flow => "flow",
        Command::Sov => "sov",
        Command::Spectral => "spectral",
        Command::Reconstruct { .. } => "reconstruct",
        Command::Hecke { .. } => "hecke",
        Command::Pvi { .. } => "pvi",
        Command::Random { .. } => "random",
    }
}

fn run(cli: &Cli, s: &Settings) -> Result<Output, CliError> {
    match &cli.command {
        Command::Validate => commands::validate(s),
        Command::Monodromy => commands::monodromy(s),
        Command::Flow => commands::flow_cmd(s),
        Command::Sov => commands::sov(s),
        Command::Spectral => commands::spectral(s),
        Command::Reconstruct { poles } => commands::reconstruct_cmd(s, poles),
        Command::Hecke { i, j, dir_i, dir_j, same_point } => {
            commands::hecke(s, *i, *j, ((*dir_i).into(), (*dir_j).into()), *same_point)
        }
        Command::Pvi { pvi_params } => match &cli.orbit {
            Some(x) => Ok(commands::orbit(commands::parse_orbit(x)?)),
            None => {
                let params = pvi_params.as_deref().map(commands::parse_params).transpose()?;
                commands::pvi(s, params)
            }
        },
        Command::Random { n, lambda_min, lambda_max } => {
            let seed = cli.seed.ok_or_else(|| CliError::Input("random needs --seed".into()))?;
            commands::random(seed, *n, *lambda_min, *lambda_max, cli.tol_alg)
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("ISOMONO_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring ISOMONO_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let start = Instant::now();
    let s = Settings {
        input: cli.input.clone(),
        path: cli.path.clone(),
        tol_ode: cli.tol_ode,
        tol_alg: cli.tol_alg,
        tol_mon: cli.tol_mon,
        base: cli.base,
    };

    let mut outputs = Vec::new();
    let code = match run(&cli, &s) {
        Ok(out) => {
            let written = match &cli.output {
                Some(p) => std::fs::write(p, &out.text)
                    .map(|_| outputs.push(FileDigest::of_bytes(&p.display().to_string(), out.text.as_bytes())))
                    .map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    print!("{}", out.text);
                    outputs.push(FileDigest::of_bytes("<stdout>", out.text.as_bytes()));
                    Ok(())
                }
            };
            match written {
                Ok(()) => out.exit,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };

    let mut inputs: Vec<FileDigest> = Vec::new();
    let mut extra: Vec<&PathBuf> = cli.input.iter().chain(cli.path.iter()).collect();
    if let Command::Reconstruct { poles } = &cli.command {
        extra.push(poles);
    }
    for p in extra {
        if let Some(d) = FileDigest::of_file(p) {
            inputs.push(d);
        }
    }
    let manifest = RunManifest::new(
        command_name(&cli.command),
        inputs,
        outputs,
        cli.tol_ode,
        cli.tol_alg,
        cli.tol_mon,
        cli.seed,
        code,
        start.elapsed().as_secs_f64(),
    );
    match &cli.output {
        Some(p) => {
            let mp = PathBuf::from(format!("{}.manifest.json", p.display()));
            if let Err(e) = std::fs::write(&mp, manifest.to_json()) {
                eprintln!("error: {}: {e}", mp.display());
            }
        }
        None => eprint!("{}", manifest.to_json()),
    }
    ExitCode::from(code as u8)
}
