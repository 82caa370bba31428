use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaxed_walras::io::{
    read_economy, read_json, write_slices_csv, CertificateFile, IoError, PurificationReportFile,
};
use relaxed_walras::purification::{slices_outside_demand, Slice};
use relaxed_walras::solver::ConstraintModeConfig;
use relaxed_walras::*;

/// Relaxed (lottery) Walrasian equilibria for finite exchange economies.
#[derive(Parser)]
#[command(name = "relaxed-walras", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Tatonnement,
    Simplicial,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FreeDisposal,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Run the assumption validators; exit 0 iff the well-formedness check passes.
    Validate { economy: PathBuf },
    /// Budget set, pure and relaxed demand of one agent at one price.
    Demand {
        economy: PathBuf,
        /// Agent index or id.
        #[arg(long)]
        agent: String,
        /// Comma-separated price, normalized on input.
        #[arg(long, allow_hyphen_values = true)]
        price: String,
    },
    /// Search for an equilibrium and write a certificate; exit 0 iff it verifies.
    Solve {
        economy: PathBuf,
        #[arg(long, value_enum, default_value = "simplicial")]
        method: MethodArg,
        #[arg(long, default_value = "certificate.json")]
        out: PathBuf,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        max_dim: Option<usize>,
        #[arg(long)]
        tol_cert: Option<f64>,
        /// Overrides the market constraint stored in the economy.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Check a certificate against an economy from scratch.
    Verify {
        economy: PathBuf,
        certificate: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Turn a certificate's lotteries into a pure slice allocation.
    Purify {
        economy: PathBuf,
        certificate: PathBuf,
        /// Agents cannot be split: pick one bundle each (approximate).
        #[arg(long)]
        atomic: bool,
        #[arg(long, default_value = "slices.csv")]
        out: PathBuf,
        #[arg(long, default_value = "purification.json")]
        report: PathBuf,
        /// Tie-breaking seed for atomic rounding.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Match random integral functionals with a pure allocation.
    DensityCheck {
        economy: PathBuf,
        certificate: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Check that no agent prefers another agent's lottery.
    EnvyCheck { economy: PathBuf, certificate: PathBuf },
}

/// Exit 1: a check ran and failed. Exit 2: the input could not be used.
enum Failure {
    Check(String),
    Input(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(message)) => {
            eprintln!("{message}");
            ExitCode::from(1)
        }
        Err(Failure::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RELAXED_WALRAS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| format!("RELAXED_WALRAS_THREADS={raw:?} is not a count"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { economy } => validate(&economy),
        Command::Demand { economy, agent, price } => demand(&economy, &agent, &price),
        Command::Solve { economy, method, out, max_iters, starts, seed, beam, max_dim, tol_cert, mode } => {
            let mut config = SolverConfig::default();
            config.max_iters = max_iters.unwrap_or(config.max_iters);
            config.starts = starts.unwrap_or(config.starts);
            config.seed = seed.unwrap_or(config.seed);
            config.beam = beam.unwrap_or(config.beam);
            config.max_dim = max_dim.unwrap_or(config.max_dim);
            config.tol_cert = tol_cert.unwrap_or(config.tol_cert);
            config.mode = mode.map(|m| match m {
                ModeArg::FreeDisposal => ConstraintModeConfig::FreeDisposal,
                ModeArg::Exact => ConstraintModeConfig::Exact,
            });
            let method = match method {
                MethodArg::Tatonnement => Method::Tatonnement,
                MethodArg::Simplicial => Method::Simplicial,
            };
            solve(&economy, method, &config, &out)
        }
        Command::Verify { economy, certificate, tol } => verify(&economy, &certificate, tol),
        Command::Purify { economy, certificate, atomic, out, report, seed } => {
            purify(&economy, &certificate, atomic, &out, &report, seed)
        }
        Command::DensityCheck { economy, certificate, k, seed, tol } => {
            density_check(&economy, &certificate, k, seed, tol)
        }
        Command::EnvyCheck { economy, certificate } => envy(&economy, &certificate),
    }
}

fn validate(path: &Path) -> Outcome {
    let economy = read_economy(path)?;
    let a1 = validate_assumption1(&economy);
    print!("{a1}");
    print!("{}", validate_assumption3(&economy));
    print!("{}", validate_assumption2iii(&economy));
    if a1.passed() {
        Ok(())
    } else {
        Err(Failure::Check("economy is not well formed".into()))
    }
}

fn parse_price(raw: &str, dimension: usize) -> Result<Price64, Failure> {
    let coords: Vec<f64> = raw
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Input(format!("price {raw:?}: {e}")))?;
    if coords.len() != dimension {
        return Err(Failure::Input(format!("price has {} coordinates, economy has {dimension} goods", coords.len())));
    }
    let (price, correction) = Price::normalize(coords).map_err(|e| Failure::Input(e.to_string()))?;
    if correction > 1e-9 {
        eprintln!("warning: price normalized (coordinate sum was off by {correction:e})");
    }
    Ok(price)
}

fn find_agent(economy: &Economy64, key: &str) -> Result<usize, Failure> {
    if let Some(i) = economy.agents().iter().position(|a| a.id == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < economy.agents().len() => Ok(i),
        _ => Err(Failure::Input(format!("no agent {key:?}"))),
    }
}

fn demand(path: &Path, agent_key: &str, raw_price: &str) -> Outcome {
    let economy = read_economy(path)?;
    let i = find_agent(&economy, agent_key)?;
    let price = parse_price(raw_price, economy.dimension())?;
    let xs = economy.consumption_set();
    let agent = economy.agent(i);
    println!("agent {i} ({}) at price {:?}", agent.id, price.to_vec());
    println!("budget set: {:?}", budget_set(xs, agent, &price));
    println!("pure demand (argmax over budget): {:?}", pure_demand(xs, agent, &price, PureDemandVariant::ArgmaxOverBudget));
    println!("pure demand (level set): {:?}", pure_demand(xs, agent, &price, PureDemandVariant::LevelSet));
    let face = demand::relaxed_demand_face(xs, agent, &price);
    println!("relaxed value: {:.16e}", face.value);
    println!("relaxed demand vertices:");
    for v in &face.vertices {
        println!("  {:?}", v.probs());
    }
    print!("{}", characterization_check(xs, agent, &price));
    Ok(())
}

fn solve(path: &Path, method: Method, config: &SolverConfig, out: &Path) -> Outcome {
    let economy = read_economy(path)?;
    let a1 = validate_assumption1(&economy);
    if !a1.passed() {
        return Err(Failure::Check(format!("economy is not well formed\n{a1}")));
    }
    let result = match method {
        Method::Tatonnement => tatonnement_solve(&economy, config),
        Method::Simplicial => simplicial_solve(&economy, config),
    };
    let (cert, verified) = match result {
        Ok(cert) => (cert, true),
        Err(SolveError::NotFound { best }) => (*best, false),
        Err(e @ SolveError::Config(_)) => return Err(Failure::Input(e.to_string())),
        Err(e @ SolveError::DimensionTooLarge { .. }) => return Err(Failure::Check(e.to_string())),
    };
    let file = CertificateFile::from_certificate(&cert, verified, Some(config));
    fs::write(out, file.to_canonical_json()?).map_err(IoError::from)?;
    if verified {
        eprintln!(
            "verified equilibrium at price {:?} (distance {:e}); certificate written to {}",
            cert.price.to_vec(),
            cert.residual.distance(cert.mode),
            out.display()
        );
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "no verified equilibrium (best distance {:e}); unverified best candidate written to {}",
            cert.residual.distance(cert.mode),
            out.display()
        )))
    }
}

fn load_pair(economy: &Path, certificate: &Path) -> Result<(Economy64, Certificate64), Failure> {
    let economy = read_economy(economy)?;
    let cert = read_json::<CertificateFile>(certificate)?.to_certificate()?;
    Ok((economy, cert))
}

/// Rejects certificates whose selection cannot be read as lotteries over X.
fn checked_selection(economy: &Economy64, cert: &Certificate64) -> Result<Vec<Lottery64>, Failure> {
    if cert.selection.len() != economy.agents().len() {
        return Err(Failure::Input(format!(
            "certificate has {} lotteries for {} agents",
            cert.selection.len(),
            economy.agents().len()
        )));
    }
    cert.selection
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if l.len() != economy.consumption_set().len() {
                return Err(Failure::Input(format!("lottery {i} has the wrong length")));
            }
            Lottery::new(l.probs().to_vec()).map_err(|e| Failure::Input(format!("lottery {i}: {e}")))
        })
        .collect()
}

fn verify(economy: &Path, certificate: &Path, tol: f64) -> Outcome {
    let (economy, cert) = load_pair(economy, certificate)?;
    let report = verify_certificate(&economy, &cert, tol);
    print!("{report}");
    println!("walras value: {:e}", walras_value_check(&economy, &cert.price, &cert.selection));
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("certificate does not verify".into()))
    }
}

fn purify(economy: &Path, certificate: &Path, atomic: bool, out: &Path, report_path: &Path, seed: u64) -> Outcome {
    let (economy, cert) = load_pair(economy, certificate)?;
    let selection = checked_selection(&economy, &cert)?;
    if !verify_certificate(&economy, &cert, 1e-6).passed() {
        eprintln!("warning: certificate does not verify; purifying its selection anyway");
    }
    let (alloc, report) = if atomic {
        let (choice, report) = round_purify(&economy, &selection, seed).map_err(|e| Failure::Input(e.to_string()))?;
        let slices = choice
            .iter()
            .enumerate()
            .map(|(agent, &bundle)| Slice { agent, mass: economy.agent(agent).weight, bundle })
            .collect();
        let mut file = PurificationReportFile::new("round", &report);
        file.choice = Some(choice);
        (SliceAllocation { slices }, file)
    } else {
        let (alloc, report) = split_purify(&economy, &selection).map_err(|e| Failure::Input(e.to_string()))?;
        let mut file = PurificationReportFile::new("split", &report);
        file.slices_outside_demand = Some(slices_outside_demand(&economy, &cert.price, &alloc));
        (alloc, file)
    };
    let csv = fs::File::create(out).map_err(IoError::from)?;
    write_slices_csv(csv, &economy, &alloc)?;
    fs::write(report_path, report.to_canonical_json()?).map_err(IoError::from)?;
    eprintln!(
        "{} slices written to {}; aggregate deviation {:e}",
        alloc.slices.len(),
        out.display(),
        report.deviation
    );
    Ok(())
}

fn density_check(economy: &Path, certificate: &Path, k: usize, seed: u64, tol: f64) -> Outcome {
    let (economy, cert) = load_pair(economy, certificate)?;
    let selection = checked_selection(&economy, &cert)?;
    let m = economy.consumption_set().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tests: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|_| (0..economy.agents().len()).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect())
        .collect();
    let (_, report) = density_refine(&economy, &selection, &tests).map_err(|e| Failure::Input(e.to_string()))?;
    for (idx, (r, p)) in report.relaxed.iter().zip(&report.pure).enumerate() {
        println!("functional {idx}: relaxed {r:.16e} pure {p:.16e}");
    }
    println!("max difference {:e}, aggregate deviation {:e}", report.max_abs_diff, report.deviation);
    if report.matched(tol) {
        Ok(())
    } else {
        Err(Failure::Check(format!("integral functionals differ by more than {tol:e}")))
    }
}

fn envy(economy: &Path, certificate: &Path) -> Outcome {
    let (economy, cert) = load_pair(economy, certificate)?;
    let selection = checked_selection(&economy, &cert)?;
    let report = envy_check(&economy, &selection);
    print!("{report}");
    if report.envy_free() {
        Ok(())
    } else {
        Err(Failure::Check("allocation is not envy-free".into()))
    }
}
