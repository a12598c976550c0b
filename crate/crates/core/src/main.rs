use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use liabnet::ingestion::RatioMethod;
use liabnet::netstats::ClusteringConvention;
use liabnet::pipeline::{
    run_pipeline, ErrorKind, InputFiles, InputSource, PipelineError, RunManifest,
    DEFAULT_TOP_FIRMS, DEFAULT_TOP_N,
};
use liabnet::reconstruction::DepositWeighting;
use liabnet::synthgen::{generate, SynthConfig};
use liabnet::ValueDirection;

/// Reconstruct a bank-firm liability network and rank its nodes by DebtRank.
#[derive(Parser, Debug)]
#[command(name = "liabnet", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic input set (banks, firms, interbank matrix).
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, conflicts_with = "synthetic")]
    banks: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    firms: Option<PathBuf>,
    /// Anonymized interbank triplet file.
    #[arg(long, conflicts_with = "synthetic")]
    interbank: Option<PathBuf>,
    /// Defaults to `<interbank>.assets`.
    #[arg(long)]
    interbank_assets: Option<PathBuf>,
    /// firm_label,bank_label pairs; overrides the bank lists in the firm table.
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Generator config (TOML) used instead of input files.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOP_FIRMS)]
    top_firms: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VDirection::AsWritten)]
    v_direction: VDirection,
    #[arg(long, value_enum, default_value_t = Deposits::Off)]
    deposits: Deposits,
    #[arg(long, value_enum, default_value_t = Clustering::MeanLocal)]
    clustering: Clustering,
    #[arg(long, value_enum, default_value_t = SectorRatio::MeanOfRatios)]
    sector_ratio: SectorRatio,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VDirection {
    AsWritten,
    Transposed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Deposits {
    Off,
    Proportional,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Clustering {
    MeanLocal,
    Transitivity,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SectorRatio {
    MeanOfRatios,
    RatioOfSums,
}

fn usage(msg: &str) -> PipelineError {
    PipelineError {
        kind: ErrorKind::Validation,
        stage: "arguments",
        message: msg.to_string(),
    }
}

fn manifest(args: RunArgs) -> Result<RunManifest, PipelineError> {
    let out = args.out.ok_or_else(|| usage("--out is required"))?;
    let input = match (args.synthetic, args.banks, args.firms, args.interbank) {
        (Some(cfg), None, None, None) => InputSource::SyntheticFile(cfg),
        (None, Some(banks), Some(firms), Some(interbank)) => InputSource::Files(InputFiles {
            banks,
            firms,
            interbank,
            interbank_assets: args.interbank_assets,
            relations: args.relations,
        }),
        _ => {
            return Err(usage(
                "give either --synthetic or all of --banks, --firms, --interbank",
            ))
        }
    };
    let mut m = RunManifest::new(input, out);
    m.top_firms = args.top_firms;
    m.top_n = args.top_n;
    m.v_direction = match args.v_direction {
        VDirection::AsWritten => ValueDirection::AsWritten,
        VDirection::Transposed => ValueDirection::Transposed,
    };
    m.deposits = match args.deposits {
        Deposits::Off => DepositWeighting::Off,
        Deposits::Proportional => DepositWeighting::Proportional,
    };
    m.clustering = match args.clustering {
        Clustering::MeanLocal => ClusteringConvention::MeanLocal,
        Clustering::Transitivity => ClusteringConvention::Transitivity,
    };
    m.ratio_method = match args.sector_ratio {
        SectorRatio::MeanOfRatios => RatioMethod::MeanOfRatios,
        SectorRatio::RatioOfSums => RatioMethod::RatioOfSums,
    };
    Ok(m)
}

fn synth(config: Option<PathBuf>, out: PathBuf) -> Result<(), PipelineError> {
    let data = |e: liabnet::synthgen::SynthError| PipelineError {
        kind: ErrorKind::Data,
        stage: "synthetic",
        message: e.to_string(),
    };
    let cfg = match config {
        Some(p) if !p.is_file() => {
            return Err(usage(&format!("config not found: {}", p.display())))
        }
        Some(p) => SynthConfig::from_file(&p).map_err(|e| usage(&e.to_string()))?,
        None => SynthConfig::default(),
    };
    let econ = generate(&cfg).map_err(|e| usage(&e.to_string()))?;
    econ.write_files(&out).map_err(data)?;
    println!("wrote synthetic inputs to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Synth { config, out }) => synth(config, out),
        None => manifest(cli.run).and_then(|m| {
            let s = run_pipeline(&m)?;
            println!("nodes = {}", s.nodes);
            println!(
                "Q1 = {}",
                s.q1.map_or("undefined".into(), |x| x.to_string())
            );
            println!(
                "Q2 = {}",
                s.q2.map_or("undefined".into(), |x| x.to_string())
            );
            println!("bundle = {}", s.out_dir.display());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
