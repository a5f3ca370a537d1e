//! `cka-sim`: figure datasets, Monte Carlo checks, protocol runs and Fock
//! demos for the conference key agreement simulator.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cka_core::encoding::EncodingScheme;
use cka_core::montecarlo::{self, McConfig, McReport, Violations};
use cka_core::optics;
use cka_core::protocol::{self, RoundPlan};
use cka_core::rates::{self, ChannelLoss, CombineRule, Figure, LossModel, Protocol, SourceModel, SweepParam, SweepQuery};
use cka_core::CkaError;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_STAT: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "cka-sim", version, about = "Loss-resilient conference key agreement simulator", args_override_self = true)]
struct Cli {
    /// key=value file merged under explicit flags
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Closed-form rate sweeps and figure datasets
    #[command(subcommand)]
    Rates(RatesCmd),
    /// Monte Carlo estimates against the closed forms
    #[command(subcommand)]
    Mc(McCmd),
    /// N-BB84 protocol runs
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// Fock-space demonstrations
    #[command(subcommand)]
    Fock(FockCmd),
}

#[derive(Subcommand, Debug)]
enum RatesCmd {
    /// Evaluate a grid over one parameter
    Sweep(SweepArgs),
    /// Write a preset figure dataset
    Figure(FigureArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ParamArg {
    Eta,
    Lambda,
    Parties,
    SourceP,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Enc,
    Nonenc,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Enc,
    Nonenc,
}

impl From<ModeArg> for Protocol {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Enc => Protocol::Encoded,
            ModeArg::Nonenc => Protocol::Nonencoded,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Loss,
    Transmission,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: ParamArg,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    steps: usize,
    /// Lossy party counts, comma separated
    #[arg(long, value_delimiter = ',', default_value = "2")]
    parties: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    protocol: ProtocolArg,
    /// PDC coupling
    #[arg(long, conflicts_with = "source_p")]
    lambda: Option<f64>,
    /// Generic source pair probability
    #[arg(long)]
    source_p: Option<f64>,
    /// Fixed per-photon loss probability
    #[arg(long, conflicts_with = "lengths_km")]
    eta: Option<f64>,
    #[arg(long, default_value_t = 80.0)]
    pump_mhz: f64,
    /// Attenuation length in km
    #[arg(long, requires = "lengths_km")]
    l0_km: Option<f64>,
    /// Fiber length per party in km, comma separated
    #[arg(long, value_delimiter = ',', requires = "l0_km")]
    lengths_km: Vec<f64>,
    /// Detector loss probability
    #[arg(long)]
    detector_eta: Option<f64>,
    #[arg(long, value_enum, default_value = "loss")]
    combine: RuleArg,
    #[arg(long, default_value_t = rates::DEFAULT_ROUNDS)]
    rounds: usize,
    #[arg(long, default_value_t = rates::DEFAULT_TYPE2_FRACTION)]
    type2_frac: f64,
    /// Apply the sifting factor to the encoded protocol as well
    #[arg(long)]
    key_factor_encoded: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(long, value_parser = ["fig-p-eta", "fig-rate-n", "fig-rate-lambda", "fig-rate-sourcep"])]
    name: String,
    #[arg(long)]
    out: PathBuf,
    /// Also write a gnuplot script next to the CSV
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Subcommand, Debug)]
enum McCmd {
    /// Sample photon losses and classify them
    Transmission(McArgs),
    /// Run full register trajectories
    State(McArgs),
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    eta: f64,
    /// Lossy party count
    #[arg(long)]
    parties: usize,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "enc")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ProtocolCmd {
    /// Run L rounds and report the key summary
    Run(ProtocolArgs),
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    #[arg(long)]
    rounds: usize,
    #[arg(long)]
    type2_frac: f64,
    #[arg(long)]
    eta: f64,
    /// Lossy party count
    #[arg(long)]
    parties: usize,
    #[arg(long, value_enum, default_value = "enc")]
    mode: ModeArg,
    #[arg(long)]
    seed: u64,
    /// Round log destination; standard output when omitted
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum FockCmd {
    /// Post-selected GHZ state from a chain of PDCs and PBSs
    PdcChain(ChainArgs),
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long)]
    lambda: f64,
    /// Total party count
    #[arg(long)]
    parties: usize,
    #[arg(long, default_value_t = cka_core::sources::DEFAULT_KMAX)]
    kmax: u32,
}

enum Failure {
    Usage(String),
    Stat,
}

impl From<CkaError> for Failure {
    fn from(e: CkaError) -> Self {
        let hint = match e {
            CkaError::Capacity { .. } => "; reduce --parties",
            _ => "",
        };
        Failure::Usage(format!("{e}{hint}"))
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let param = match a.param {
        ParamArg::Eta => SweepParam::Eta,
        ParamArg::Lambda => SweepParam::Lambda,
        ParamArg::Parties => SweepParam::Parties,
        ParamArg::SourceP => SweepParam::SourceP,
    };
    let mut q = SweepQuery::new(param, a.from, a.to, a.steps);
    q.parties = a.parties;
    q.protocols = match a.protocol {
        ProtocolArg::Enc => vec![Protocol::Encoded],
        ProtocolArg::Nonenc => vec![Protocol::Nonencoded],
        ProtocolArg::Both => vec![Protocol::Encoded, Protocol::Nonencoded],
    };
    let mut source = match (a.lambda, a.source_p) {
        (_, Some(p)) => SourceModel::generic(p),
        (Some(l), None) => SourceModel::pdc(l),
        (None, None) => SourceModel::pdc(0.01),
    };
    source.pump_hz = a.pump_mhz * 1e6;
    q.source = source;
    let channel = match (a.l0_km, a.lengths_km.is_empty()) {
        (Some(l0_km), false) => ChannelLoss::Fiber { l0_km, lengths_km: a.lengths_km },
        _ => ChannelLoss::Uniform(a.eta.unwrap_or(0.0)),
    };
    let rule = match a.combine {
        RuleArg::Loss => CombineRule::LossProduct,
        RuleArg::Transmission => CombineRule::TransmissionProduct,
    };
    q.loss = LossModel { channel, detector: a.detector_eta, rule };
    q.rounds = a.rounds;
    q.type2_fraction = a.type2_frac;
    q.key_factor_encoded = a.key_factor_encoded;
    let points = rates::sweep(&q)?;
    write_out(a.out.as_deref(), &rates::to_csv(&points))
}

fn cmd_figure(a: FigureArgs) -> Result<(), Failure> {
    let fig: Figure = a.name.parse()?;
    write_out(Some(&a.out), &rates::to_csv(&fig.points()?))?;
    if a.gnuplot {
        let script = a.out.with_extension("gp");
        write_out(Some(&script), &fig.gnuplot(&a.out.display().to_string()))?;
    }
    Ok(())
}

fn cmd_mc(a: McArgs, state: bool) -> Result<(), Failure> {
    let mut cfg = McConfig::new(a.trials, a.seed, a.eta, a.parties, a.mode.into());
    if cfg.mode == Protocol::Nonencoded {
        cfg.scheme = EncodingScheme::bare(a.parties);
    }
    let report = if state {
        let s = montecarlo::estimate_state_level(&cfg)?;
        McReport::new(cfg, &s.estimate, s.violations)
    } else {
        let e = montecarlo::estimate_transmission(&cfg)?;
        McReport::new(cfg, &e, Violations::default())
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Usage(e.to_string()))?;
    write_out(a.out.as_deref(), &format!("{json}\n"))?;
    if report.passes() {
        Ok(())
    } else {
        Err(Failure::Stat)
    }
}

fn cmd_protocol(a: ProtocolArgs) -> Result<(), Failure> {
    let plan = RoundPlan::new(a.rounds, a.type2_frac, a.seed)?;
    let run = protocol::run_protocol(&plan, &EncodingScheme::redundant(a.parties), &LossModel::uniform(a.eta), a.mode.into())?;
    write_out(a.log.as_deref(), &run.round_log_csv())?;
    println!("{}", run.summary_line());
    Ok(())
}

fn cmd_fock(a: ChainArgs) -> Result<(), Failure> {
    let chain = optics::build_ghz_chain(a.parties, a.lambda, a.kmax)?;
    println!("parties={} pdc={} pbs={}", chain.n_parties, chain.n_pdc, chain.n_pbs);
    println!("probability={}", rates::fmt_sig(chain.probability));
    println!("conditional_probability={}", rates::fmt_sig(chain.conditional_probability));
    print!("{}", chain.post_selected.dump());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Rates(RatesCmd::Sweep(a)) => cmd_sweep(a),
        Cmd::Rates(RatesCmd::Figure(a)) => cmd_figure(a),
        Cmd::Mc(McCmd::Transmission(a)) => cmd_mc(a, false),
        Cmd::Mc(McCmd::State(a)) => cmd_mc(a, true),
        Cmd::Protocol(ProtocolCmd::Run(a)) => cmd_protocol(a),
        Cmd::Fock(FockCmd::PdcChain(a)) => cmd_fock(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Stat) => {
            eprintln!("statistical check failed: |z| >= {} or violations recorded", montecarlo::Z_THRESHOLD);
            ExitCode::from(EXIT_STAT)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
