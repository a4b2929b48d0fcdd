//! Command-line front end: inspect theories, check channels, decompose
//! non-signalling channels into quasi-mixtures, reconstruct, and generate
//! seeded random test channels.
//!
//! Exit codes: 0 on success, 1 on domain errors (the error name goes to
//! stderr), 2 on malformed input (bad flags, unreadable or invalid files).

mod schema;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quasilocal::decompose::{
    decompose_ns_channel, negativity, reconstruct, Algorithm, DecomposeOptions, FactorMode,
    MixtureTerm, Objective, QuasiMixture,
};
use quasilocal::duotensor::hopping_metric;
use quasilocal::nonsignalling::ns_report_channel;
use quasilocal::numerics::{ConeDescription, RealMatrix};
use quasilocal::theories::{build_theory, random_ns_channel};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable, or schema-violating input: exit 2.
    Malformed(String),
    /// A well-formed request the library rejects: exit 1.
    Domain(quasilocal::Error),
}

impl From<quasilocal::Error> for CliError {
    fn from(e: quasilocal::Error) -> Self {
        CliError::Domain(e)
    }
}

#[derive(Parser)]
#[command(
    name = "quasilocal",
    version,
    about = "Non-signalling GPT channels: probability tables, verification, quasi-local decompositions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect built-in theories.
    Theory {
        #[command(subcommand)]
        action: TheoryAction,
    },
    /// Verify that a channel file holds a non-signalling channel.
    Check {
        /// Channel file (JSON).
        #[arg(long)]
        channel: PathBuf,
        /// Signalling tolerance.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Decompose a non-signalling channel into a mixture of product local
    /// maps.
    Decompose {
        #[arg(long)]
        channel: PathBuf,
        /// Factor kind: lifted discard-preserving maps or local channels.
        #[arg(long, value_enum, default_value = "channels")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "pipeline")]
        algorithm: AlgorithmArg,
        #[arg(long, value_enum, default_value = "feasible")]
        objective: ObjectiveArg,
        /// Output mixture file (JSON).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Rebuild the channel a mixture file represents.
    Reconstruct {
        /// Mixture file (JSON).
        #[arg(long)]
        mix: PathBuf,
        /// Compare against this channel file and report the residual.
        #[arg(long)]
        channel: Option<PathBuf>,
        /// Write the reconstructed channel here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the negativity of a mixture file.
    Negativity {
        #[arg(long)]
        mix: PathBuf,
    },
    /// Generate a seeded random non-signalling channel.
    RandomNs {
        /// Comma-separated per-party theory ids, e.g. "gbit,gbit".
        #[arg(long)]
        theories: String,
        #[arg(long)]
        seed: u64,
        /// Weight of the embedded nonproduct box part, in [0, 1].
        #[arg(long, default_value_t = 0.5)]
        mix: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TheoryAction {
    /// Print a theory's systems, frame, and hopping metric.
    Show { id: String },
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Dp,
    Channels,
}

#[derive(ValueEnum, Clone, Copy)]
enum AlgorithmArg {
    Pipeline,
    Direct,
}

#[derive(ValueEnum, Clone, Copy)]
enum ObjectiveArg {
    Feasible,
    MinNegativity,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(e)) => {
            eprintln!("{}: {e}", e.name());
            ExitCode::from(1)
        }
        Err(CliError::Malformed(msg)) => {
            eprintln!("malformed input: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Theory {
            action: TheoryAction::Show { id },
        } => theory_show(&id),
        Command::Check { channel, tol } => check(&channel, tol),
        Command::Decompose {
            channel,
            mode,
            algorithm,
            objective,
            out,
            tol,
        } => decompose(&channel, mode, algorithm, objective, &out, tol),
        Command::Reconstruct { mix, channel, out } => {
            reconstruct_cmd(&mix, channel.as_deref(), out.as_deref())
        }
        Command::Negativity { mix } => negativity_cmd(&mix),
        Command::RandomNs {
            theories,
            seed,
            mix,
            out,
        } => random_ns(&theories, seed, mix, &out),
    }
}

fn fmt_matrix(m: &RealMatrix) -> String {
    (0..m.rows())
        .map(|r| {
            let row = m
                .row(r)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            format!("  [{row}]")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn fmt_cone(c: &ConeDescription) -> String {
    match c {
        ConeDescription::Polyhedral { generators, .. } => {
            format!("polyhedral ({} generators)", generators.len())
        }
        ConeDescription::PauliPsd { qubits } => format!("positive semidefinite ({qubits} qubit)"),
    }
}

fn theory_show(id: &str) -> Result<(), CliError> {
    let theory = schema::parse_theory(id)?;
    let frame = build_theory(&theory)?;
    let system = frame.system();
    let metric = hopping_metric(&frame)?;
    println!("theory: {theory}");
    println!("dimension: {}", system.dim());
    println!("frame size: {}", frame.size());
    println!(
        "discard: [{}]",
        system
            .discard()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("state cone: {}", fmt_cone(system.state_cone()));
    println!("effect cone: {}", fmt_cone(system.effect_cone()));
    println!("fiducial states (columns):\n{}", fmt_matrix(frame.prep()));
    println!("fiducial effects (rows):\n{}", fmt_matrix(frame.meas()));
    println!("hopping metric h:\n{}", fmt_matrix(&metric.h));
    println!("inverse metric h^-1:\n{}", fmt_matrix(&metric.h_inv));
    Ok(())
}

fn check(channel: &std::path::Path, tol: f64) -> Result<(), CliError> {
    let file: schema::ChannelFile = schema::read_json(channel)?;
    let loaded = schema::load_channel(&file)?;
    let in_refs: Vec<_> = loaded.in_frames.iter().collect();
    let report = ns_report_channel(&loaded.map, &in_refs, tol)?;
    println!(
        "channel: {} parties, matrix {}x{}",
        loaded.map.party_count(),
        loaded.map.out_dim(),
        loaded.map.in_dim()
    );
    println!(
        "discard deviation: {:.3e}",
        loaded.map.discard_deviation()
    );
    for (i, v) in report.per_party_violation.iter().enumerate() {
        println!("party {i} signalling violation: {v:.3e}");
    }
    println!("non-signalling: {}", if report.is_ns { "yes" } else { "no" });
    if !report.is_ns {
        let violation = report
            .per_party_violation
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        return Err(CliError::Domain(quasilocal::Error::NotNonSignalling {
            violation,
        }));
    }
    Ok(())
}

fn decompose(
    channel: &std::path::Path,
    mode: ModeArg,
    algorithm: AlgorithmArg,
    objective: ObjectiveArg,
    out: &std::path::Path,
    tol: f64,
) -> Result<(), CliError> {
    let file: schema::ChannelFile = schema::read_json(channel)?;
    let loaded = schema::load_channel(&file)?;
    let options = DecomposeOptions {
        mode: match mode {
            ModeArg::Dp => FactorMode::DpFactors,
            ModeArg::Channels => FactorMode::ChannelFactors,
        },
        algorithm: match algorithm {
            AlgorithmArg::Pipeline => Algorithm::Pipeline,
            AlgorithmArg::Direct => Algorithm::Direct,
        },
        objective: match objective {
            ObjectiveArg::Feasible => Objective::Feasible,
            ObjectiveArg::MinNegativity => Objective::MinNegativity,
        },
        tol,
    };
    let in_refs: Vec<_> = loaded.in_frames.iter().collect();
    let out_refs: Vec<_> = loaded.out_frames.iter().collect();
    let mixture = decompose_ns_channel(&loaded.map, &in_refs, &out_refs, &options)?;
    let mix_file = schema::MixtureFile {
        format_version: schema::FORMAT_VERSION,
        frame_id: schema::frame_id(&loaded.parties),
        terms: mixture
            .terms
            .iter()
            .map(|t| schema::TermEntry {
                weight: t.weight,
                factors: t.factors.iter().map(schema::matrix_to_rows).collect(),
            })
            .collect(),
        negativity: mixture.negativity,
        residual: mixture.residual,
    };
    schema::write_json(out, &mix_file)?;
    println!("terms: {}", mixture.terms.len());
    println!("negativity: {}", mixture.negativity);
    println!("residual: {:.3e}", mixture.residual);
    println!("dropped mass: {:.3e}", mixture.dropped_mass + 0.0);
    println!("wrote {}", out.display());
    Ok(())
}

fn reconstruct_cmd(
    mix: &std::path::Path,
    channel: Option<&std::path::Path>,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let file: schema::MixtureFile = schema::read_json(mix)?;
    schema::validate_mixture(&file)?;
    let terms: Vec<MixtureTerm> = schema::mixture_terms(&file)?;
    let mixture = QuasiMixture {
        terms,
        negativity: file.negativity,
        residual: file.residual,
        dropped_mass: 0.0,
    };
    let rebuilt = reconstruct(&mixture)?;
    println!(
        "reconstructed channel: {}x{} from {} terms",
        rebuilt.rows(),
        rebuilt.cols(),
        mixture.terms.len()
    );
    if let Some(channel_path) = channel {
        let cf: schema::ChannelFile = schema::read_json(channel_path)?;
        let loaded = schema::load_channel(&cf)?;
        let residual = rebuilt.max_abs_diff(loaded.map.matrix())?;
        println!("residual: {:.3e}", residual);
    }
    if let Some(out_path) = out {
        let parties = schema::parse_frame_id(&file.frame_id)?;
        let metadata = BTreeMap::from([("source".to_string(), "reconstruct".to_string())]);
        let cf = schema::channel_file(&parties, &rebuilt, metadata);
        // Round-trip through the loader so shape mismatches against the
        // declared theories surface before anything is written.
        schema::load_channel(&cf)?;
        schema::write_json(out_path, &cf)?;
        println!("wrote {}", out_path.display());
    }
    Ok(())
}

fn negativity_cmd(mix: &std::path::Path) -> Result<(), CliError> {
    let file: schema::MixtureFile = schema::read_json(mix)?;
    schema::validate_mixture(&file)?;
    let weights: Vec<f64> = file.terms.iter().map(|t| t.weight).collect();
    let value = negativity(&weights)?;
    println!("terms: {}", weights.len());
    println!("weight sum: {}", weights.iter().sum::<f64>());
    println!("negativity: {value}");
    println!("l1 norm: {}", weights.iter().map(|w| w.abs()).sum::<f64>());
    Ok(())
}

fn random_ns(theories: &str, seed: u64, mix: f64, out: &std::path::Path) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&mix) || !mix.is_finite() {
        return Err(CliError::Malformed(format!("mix {mix} outside [0, 1]")));
    }
    let parties: Vec<_> = theories
        .split(',')
        .map(|id| schema::parse_theory(id.trim()).map(|t| (t.clone(), t)))
        .collect::<Result<_, _>>()?;
    let map = random_ns_channel(&parties, seed, mix)?;
    let metadata = BTreeMap::from([
        ("generator".to_string(), "random-ns".to_string()),
        ("mix".to_string(), mix.to_string()),
        ("seed".to_string(), seed.to_string()),
    ]);
    let file = schema::channel_file(&parties, map.matrix(), metadata);
    schema::write_json(out, &file)?;
    println!(
        "wrote {}: {} parties, {}x{} matrix, seed {seed}",
        out.display(),
        parties.len(),
        map.out_dim(),
        map.in_dim()
    );
    Ok(())
}
