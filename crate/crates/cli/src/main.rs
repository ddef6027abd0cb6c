use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use steerkit::harness::{
    hierarchy_campaign, i3322_envelope_campaign, tightness_campaign, unit_grid, werner_scan, write_werner_csv,
    CampaignReport, TightnessOptions,
};
use steerkit::optimizer::DEFAULT_REACH_TOL;
use steerkit::{
    analyze, maximize, BellState, DensityMatrix, Error, Functional, MeasureReport, OptimizerConfig, SamplerKind,
    SamplerSpec, StateDocument,
};

#[derive(Parser)]
#[command(
    name = "steerkit",
    version,
    about = "Two-qubit steering, nonlocality and entanglement measures"
)]
struct Cli {
    /// Worker threads for campaigns (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form measures of a single state
    Analyze {
        #[command(flatten)]
        state: StateSource,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Werner-state analytics on an even grid, as CSV
    Werner {
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw random states and print them as JSON documents
    Sample {
        #[arg(long)]
        kind: SamplerKind,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, env = "STEERKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random settings never beat the closed forms; the optimizer reaches them
    VerifyTightness {
        #[arg(long, default_value_t = 10_000)]
        states: u64,
        #[arg(long, default_value_t = 100)]
        settings: u64,
        /// States passed through the optimizer
        #[arg(long, default_value_t = 100)]
        certify: u64,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// S2 = N2, S2 > 0 ⇒ S3 > 0 ⇒ E > 0 and E >= S3 on random states
    VerifyHierarchy {
        #[arg(long, default_value_t = 100_000)]
        states: u64,
        #[arg(long, default_value = "ginibre_mixed")]
        kind: SamplerKind,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, env = "STEERKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimized I3322 on Werner states against 5w/4 - 1
    #[command(name = "verify-3322")]
    Verify3322 {
        /// Number of evenly spaced points on [0, 1]
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize a functional over measurement settings
    Optimize {
        #[arg(long)]
        functional: Functional,
        #[command(flatten)]
        state: StateSource,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StateSource {
    /// JSON state document
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    werner: Option<f64>,
    /// phi+, phi-, psi+ or psi-
    #[arg(long)]
    bell: Option<BellState>,
}

impl StateSource {
    fn load(&self) -> steerkit::Result<DensityMatrix> {
        if let Some(path) = &self.input {
            StateDocument::from_json(&fs::read_to_string(path)?)?.to_density()
        } else if let Some(w) = self.werner {
            DensityMatrix::werner(w)
        } else if let Some(which) = self.bell {
            Ok(DensityMatrix::bell(which))
        } else {
            unreachable!("clap enforces one state source")
        }
    }
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, env = "STEERKIT_SEED", default_value_t = 0)]
    seed: u64,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            ..OptimizerConfig::with_seed(self.seed)
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn emit(out: Option<&Path>, text: &str) -> steerkit::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn campaign(out: Option<&Path>, result: steerkit::Result<CampaignReport>) -> steerkit::Result<()> {
    match result {
        Ok(report) => emit(out, &json(&report)),
        Err(Error::CampaignFailed(report)) => {
            emit(out, &json(&report))?;
            Err(Error::CampaignFailed(report))
        }
        Err(e) => Err(e),
    }
}

fn run(command: Command) -> steerkit::Result<()> {
    match command {
        Command::Analyze { state, format } => {
            let report = analyze(&state.load()?)?;
            let text = match format {
                Format::Json => json(&report),
                Format::Csv => format!("{}\n{}\n", MeasureReport::CSV_HEADER, report.csv_row()),
            };
            emit(None, &text)
        }
        Command::Werner { from, to, steps, out } => {
            let rows = werner_scan(from, to, steps)?;
            let mut buf = Vec::new();
            write_werner_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))
        }
        Command::Sample {
            kind,
            rank,
            count,
            seed,
            out,
        } => {
            let spec = SamplerSpec::new(kind, rank, seed, count)?;
            let docs = (0..count)
                .map(|i| spec.sample(i).map(|rho| StateDocument::from_density(&rho)))
                .collect::<steerkit::Result<Vec<_>>>()?;
            emit(out.as_deref(), &json(&docs))
        }
        Command::VerifyTightness {
            states,
            settings,
            certify,
            rank,
            opt,
            out,
        } => {
            let opts = TightnessOptions {
                n_states: states,
                settings_per_state: settings,
                certify_states: certify,
                reach_tol: DEFAULT_REACH_TOL,
                rank,
                seed: opt.seed,
            };
            campaign(out.as_deref(), tightness_campaign(&opts, &opt.config()))
        }
        Command::VerifyHierarchy {
            states,
            kind,
            rank,
            seed,
            out,
        } => {
            let spec = SamplerSpec::new(kind, rank, seed, states)?;
            campaign(out.as_deref(), hierarchy_campaign(&spec))
        }
        Command::Verify3322 { grid, opt, out } => {
            if grid == 0 {
                return Err(Error::InvalidConfig("--grid needs at least one point".into()));
            }
            campaign(out.as_deref(), i3322_envelope_campaign(&unit_grid(grid), &opt.config()))
        }
        Command::Optimize {
            functional,
            state,
            opt,
            out,
        } => {
            let result = maximize(functional, &state.load()?.fano(), &opt.config())?;
            emit(out.as_deref(), &json(&result))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
