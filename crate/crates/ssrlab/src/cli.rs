//! Command-line interface.
//!
//! Exit codes: 0 success or allowed, 1 usage, 2 validation or legality
//! failure, 3 internal assertion.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use ssrlab_core::catalysis::{conditional_swap_s, sector_cnot, swap_register, z_conditioned_s, CatalysisPlan};
use ssrlab_core::protocol::{Session, StepOutcome};
use ssrlab_core::{is_allowed, Legality, LocalOperator, ModeId, ModeSpec, Party, Register, C64};

use crate::experiment::{attack_demo, catalyst_postselect, swap_scaling, to_csv, SwapConfig, MIN_POSTSELECT_TRIALS};
use crate::format::{read_json, InstanceDto, OperatorDto, PartyDto, RegisterDto, StateDto, StepDto};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ssrlab", version, about = "Experiments on charge-superselection protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Catalytic-swap fidelity and charge distribution as a function of n.
    SwapScaling(SwapArgs),
    /// Sector-wise attack on a fixed-charge commitment instance.
    AttackDemo(AttackArgs),
    /// Checks an operator against the superselection rule.
    ValidateOp(ValidateArgs),
    /// Monte Carlo rate of catalyst preparation by post-selection.
    CatalystPostselect(PostselectArgs),
    /// Writes a built-in operator (and optionally its register) as JSON.
    EmitOp(EmitArgs),
    /// Runs a two-party protocol script.
    RunProtocol(ProtocolArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    /// Catalyst sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Inclusive range `A:B` or `A:B:step`.
    #[arg(long)]
    pub n_range: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SwapArgs {
    #[command(flatten)]
    pub range: RangeArgs,
    /// Amplitude of |0⟩ on x, as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Amplitude of |1⟩ on x, as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Random inputs per n when no amplitudes are given.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill the wall_time_ms column (otherwise 0, keeping output reproducible).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Bundled {
    Epr,
    Revealing,
    Mixed,
}

impl Bundled {
    pub fn text(self) -> &'static str {
        match self {
            Bundled::Epr => include_str!("../data/epr.json"),
            Bundled::Revealing => include_str!("../data/revealing.json"),
            Bundled::Mixed => include_str!("../data/mixed.json"),
        }
    }
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, conflicts_with = "bundled", required_unless_present = "bundled")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub bundled: Option<Bundled>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only `json` is supported.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub op: PathBuf,
    #[arg(long)]
    pub register: PathBuf,
}

#[derive(Debug, Args)]
pub struct PostselectArgs {
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BuiltinOp {
    /// Plain swap of a restricted fermion `e` and a free photon `p`.
    Swap,
    /// `S` on `x, y1..y_{n−1}`.
    ConditionalSwapS,
    /// CNOT from `x` onto `z`, active when the charge of `x, y1..y_{n−1}` lies in `1..n−1`.
    SectorCnot,
    /// `S` on `x, y1..y_{n−1}` conditioned on `z = 1`.
    ZConditionedS,
    /// Identity on `x, y1..y_{n−1}, z`.
    Identity,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    #[arg(long, value_enum)]
    pub name: BuiltinOp,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the register the operator refers to.
    #[arg(long)]
    pub register_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Initial state file (register plus amplitudes).
    #[arg(long)]
    pub state: PathBuf,
    /// JSON list of steps.
    #[arg(long)]
    pub script: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Validation(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Validation(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

/// What a successful command prints and how it exits.
#[derive(Debug)]
pub struct Report {
    pub text: String,
    pub out: Option<PathBuf>,
    pub code: i32,
}

impl Report {
    fn ok(text: String, out: Option<PathBuf>) -> Self {
        Self { text, out, code: EXIT_OK }
    }
}

pub fn parse_range(spec: &str) -> Result<Vec<usize>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| usage(format!("bad number `{s}` in --n-range")));
    let (a, b, step) = match parts.as_slice() {
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, s] => (num(a)?, num(b)?, num(s)?),
        _ => return Err(usage(format!("--n-range must be A:B or A:B:step, got `{spec}`"))),
    };
    if step == 0 || a > b {
        return Err(usage(format!("empty range `{spec}`")));
    }
    Ok((a..=b).step_by(step).collect())
}

fn sizes(range: &RangeArgs) -> Result<Vec<usize>, Failure> {
    let mut ns = range.n.clone();
    if let Some(spec) = &range.n_range {
        ns.extend(parse_range(spec)?);
    }
    if ns.is_empty() {
        return Err(usage("give --n or --n-range"));
    }
    if let Some(n) = ns.iter().find(|&&n| n < 2) {
        return Err(usage(format!("n must be at least 2, got {n}")));
    }
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

pub fn parse_complex(s: &str) -> Result<C64, Failure> {
    let bad = || usage(format!("bad amplitude `{s}`; use `re` or `re,im`"));
    let mut it = s.split(',').map(|p| p.trim().parse::<f64>());
    let re = it.next().ok_or_else(bad)?.map_err(|_| bad())?;
    let im = match it.next() {
        Some(v) => v.map_err(|_| bad())?,
        None => 0.0,
    };
    if it.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

fn amplitudes(alpha: &Option<String>, beta: &Option<String>) -> Result<Option<(C64, C64)>, Failure> {
    let complement = |a: C64| -> Result<C64, Failure> {
        let rest = 1.0 - a.norm_sqr();
        if rest < -1e-12 {
            return Err(Failure::Validation(anyhow!("|amplitude|² = {} exceeds 1", a.norm_sqr())));
        }
        Ok(C64::new(rest.max(0.0).sqrt(), 0.0))
    };
    Ok(match (alpha, beta) {
        (None, None) => None,
        (Some(a), None) => {
            let a = parse_complex(a)?;
            Some((a, complement(a)?))
        }
        (None, Some(b)) => {
            let b = parse_complex(b)?;
            Some((complement(b)?, b))
        }
        (Some(a), Some(b)) => Some((parse_complex(a)?, parse_complex(b)?)),
    })
}

fn serialize<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.into()))?;
    s.push('\n');
    Ok(s)
}

fn rows_out<T: Serialize + crate::experiment::CsvRow>(rows: &[T], format: Format) -> Result<String, Failure> {
    match format {
        Format::Csv => Ok(to_csv(rows)),
        Format::Json => serialize(&rows),
    }
}

fn cmd_swap(args: &SwapArgs) -> Result<Report, Failure> {
    let ns = sizes(&args.range)?;
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let config = SwapConfig {
        input: amplitudes(&args.alpha, &args.beta)?,
        trials: args.trials,
        seed: args.seed,
        timing: args.timing,
    };
    let rows = swap_scaling(&ns, &config)?;
    Ok(Report::ok(rows_out(&rows, args.output.format)?, args.output.out.clone()))
}

fn cmd_attack(args: &AttackArgs) -> Result<Report, Failure> {
    if args.format != Format::Json {
        return Err(usage("attack-demo only writes json"));
    }
    let dto: InstanceDto = match (&args.instance, args.bundled) {
        (Some(path), _) => read_json(path)?,
        (None, Some(b)) => serde_json::from_str(b.text()).map_err(|e| Failure::Internal(e.into()))?,
        (None, None) => return Err(usage("give --instance or --bundled")),
    };
    let instance = dto.build().context("invalid commitment instance")?;
    let report = attack_demo(&instance)?;
    let code = if report.complete() {
        EXIT_OK
    } else if report.concealing {
        // A concealing instance must always be fully attackable.
        EXIT_INTERNAL
    } else {
        EXIT_VALIDATION
    };
    Ok(Report {
        text: serialize(&report)?,
        out: args.out.clone(),
        code,
    })
}

fn cmd_validate(args: &ValidateArgs) -> Result<Report, Failure> {
    let register = read_json::<RegisterDto>(&args.register)?.build()?;
    let dto: OperatorDto = read_json(&args.op)?;
    let op = dto.build(&register)?;
    let (text, code) = match is_allowed(&op, &dto.target_ids(), &register).map_err(anyhow::Error::from)? {
        Legality::Allowed => ("ALLOWED\n".to_string(), EXIT_OK),
        Legality::Blocked(w) => (format!("BLOCKED {w}\n"), EXIT_VALIDATION),
    };
    Ok(Report { text, out: None, code })
}

fn cmd_postselect(args: &PostselectArgs) -> Result<Report, Failure> {
    let ns = sizes(&args.range)?;
    if args.trials < MIN_POSTSELECT_TRIALS {
        return Err(usage(format!("--trials must be at least {MIN_POSTSELECT_TRIALS}")));
    }
    let rows = catalyst_postselect(&ns, args.trials, args.seed)?;
    Ok(Report::ok(rows_out(&rows, args.output.format)?, args.output.out.clone()))
}

fn builtin(name: BuiltinOp, n: usize) -> Result<(Register, LocalOperator, Vec<ModeId>), Failure> {
    if name == BuiltinOp::Swap {
        let register = Register::new(vec![
            ModeSpec::fermion("e", Party::Alice).restricted(),
            ModeSpec::boson("p", 1, Party::Alice).free(),
        ])
        .map_err(anyhow::Error::from)?;
        return Ok((register, ssrlab_core::operator::swap(2), vec!["e".into(), "p".into()]));
    }
    if n < 2 {
        return Err(usage(format!("n must be at least 2, got {n}")));
    }
    let (register, plan): (Register, CatalysisPlan) = swap_register(n, Party::Alice).map_err(anyhow::Error::from)?;
    let all = plan.targets();
    let (op, targets) = match name {
        BuiltinOp::ConditionalSwapS => (conditional_swap_s(n), all[..n].to_vec()),
        BuiltinOp::SectorCnot => (sector_cnot(n), all),
        BuiltinOp::ZConditionedS => (z_conditioned_s(n), all),
        BuiltinOp::Identity => (Ok(LocalOperator::identity(vec![2; n + 1])), all),
        BuiltinOp::Swap => unreachable!("handled above"),
    };
    Ok((register, op.map_err(anyhow::Error::from)?, targets))
}

fn cmd_emit(args: &EmitArgs) -> Result<Report, Failure> {
    let (register, op, targets) = builtin(args.name, args.n)?;
    let dto = OperatorDto::from_operator(&op, &targets)?;
    if let Some(path) = &args.register_out {
        write_file(path, &serialize(&RegisterDto::from_register(&register))?)?;
    }
    Ok(Report::ok(serialize(&dto)?, args.out.clone()))
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum StepJson {
    Apply { index: usize, legality: &'static str, owners: BTreeMap<PartyDto, Vec<String>> },
    Transfer { index: usize, owners: BTreeMap<PartyDto, Vec<String>> },
    Measure { index: usize, outcome: Vec<u8>, probability: f64, owners: BTreeMap<PartyDto, Vec<String>> },
}

#[derive(Serialize)]
struct TranscriptJson {
    steps: Vec<StepJson>,
    final_state: StateDto,
}

fn owners(register: &Register) -> BTreeMap<PartyDto, Vec<String>> {
    let mut out: BTreeMap<PartyDto, Vec<String>> = BTreeMap::new();
    for party in [Party::Alice, Party::Bob] {
        out.insert(party.into(), register.owned_by(party).iter().map(|id| id.to_string()).collect());
    }
    out
}

fn cmd_protocol(args: &ProtocolArgs) -> Result<Report, Failure> {
    let initial = read_json::<StateDto>(&args.state)?.build()?;
    let steps: Vec<StepDto> = read_json(&args.script)?;
    let base = args.script.parent().unwrap_or(Path::new("."));
    let mut session = Session::new(initial);
    let mut out = Vec::with_capacity(steps.len());
    for (i, dto) in steps.iter().enumerate() {
        let step = dto
            .build(session.state().register(), base)
            .with_context(|| format!("step {i}"))?;
        let outcome = session.step(&step).map_err(|e| anyhow!("{e}"))?.outcome.clone();
        let owners = owners(session.state().register());
        out.push(match outcome {
            StepOutcome::Applied { .. } => StepJson::Apply {
                index: i,
                legality: "allowed",
                owners,
            },
            StepOutcome::Transferred => StepJson::Transfer { index: i, owners },
            StepOutcome::Measured { outcome, probability } => StepJson::Measure {
                index: i,
                outcome,
                probability,
                owners,
            },
        });
    }
    let (state, _) = session.finish();
    let json = TranscriptJson {
        steps: out,
        final_state: StateDto::from_state(&state),
    };
    Ok(Report::ok(serialize(&json)?, args.out.clone()))
}

pub fn execute(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::SwapScaling(a) => cmd_swap(a),
        Command::AttackDemo(a) => cmd_attack(a),
        Command::ValidateOp(a) => cmd_validate(a),
        Command::CatalystPostselect(a) => cmd_postselect(a),
        Command::EmitOp(a) => cmd_emit(a),
        Command::RunProtocol(a) => cmd_protocol(a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Validation)
}

/// Parses `args`, runs the command, prints, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            match &report.out {
                Some(path) => {
                    if let Err(f) = write_file(path, &report.text) {
                        eprintln!("error: {:#}", anyhow_of(&f));
                        return f.code();
                    }
                }
                None => {
                    let _ = std::io::stdout().write_all(report.text.as_bytes());
                }
            }
            report.code
        }
        Err(f) => {
            eprintln!("error: {:#}", anyhow_of(&f));
            f.code()
        }
    }
}

fn anyhow_of(f: &Failure) -> &anyhow::Error {
    match f {
        Failure::Usage(e) | Failure::Validation(e) | Failure::Internal(e) => e,
    }
}
