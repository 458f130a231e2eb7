//! `rabmc`: check safety of relational action bases.
//!
//! Exit codes: 0 every property SAFE (or no violation for `oracle`), 1 some
//! property UNSAFE or a bench verdict differs from its sidecar, 2 bad
//! input, 3 solver failure, 4 a budget ran out with nothing UNSAFE.

mod bench;
mod common;
mod table;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rabmc::engine::Mode;
use rabmc::oracle::{ArithDomain, Bounds, Explorer, Target};
use rabmc::spec::print_spec;
use rabmc::transform::eliminate_universal_guards;

use common::{load_spec, Failure, RunConfig};

#[derive(Parser)]
#[command(name = "rabmc", version, about = "Symbolic safety checker for relational action bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the backward search for the unsafe formulae of a spec.
    Verify {
        spec: PathBuf,
        /// Only these properties (default: all).
        #[arg(long = "property", short = 'p')]
        properties: Vec<String>,
        /// Write one JSON report per property into this directory.
        #[arg(long)]
        report_dir: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the spec with universal guards removed.
    Transform {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Stage::Hat)]
        stage: Stage,
        /// Write here instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Compare the output with this file; a difference exits with 1.
        #[arg(long, conflicts_with = "out")]
        golden: Option<PathBuf>,
        /// With --golden, overwrite the file instead of comparing.
        #[arg(long, requires = "golden")]
        bless: bool,
    },
    /// Verify every spec in a directory against its `.expect` sidecar and
    /// print CSV statistics.
    Bench {
        dir: PathBuf,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Bounded forward exploration over small concrete structures.
    Oracle {
        spec: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Size of every memory sort.
        #[arg(long, default_value_t = 2)]
        index: usize,
        /// Elements besides the constants, per id sort.
        #[arg(long, default_value_t = 2)]
        id_extra: usize,
        /// Elements besides the constants, per value sort.
        #[arg(long, default_value_t = 1)]
        value_extra: usize,
        /// Sampled arithmetic values come from this range plus the
        /// numerals of the spec and their neighbours.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values_t = [-4, 4])]
        arith_range: Vec<i64>,
        /// Follow exactly this sequence of transitions.
        #[arg(long, value_delimiter = ',')]
        replay: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Tilde,
    Hat,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Inst,
    Transform,
    ExactPre,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiaArg {
    Cooper,
    Instantiate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatsFormat {
    Json,
    Text,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Inst)]
    mode: ModeArg,
    /// SMT solver binary (default: $RABMC_SOLVER, then z3 or cvc5 on PATH).
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Extra universal invariants for pruning, as `(invariant ...)` forms.
    #[arg(long)]
    invariant_file: Option<PathBuf>,
    /// Ignore the `(invariant ...)` forms of the spec itself.
    #[arg(long)]
    no_declared_invariants: bool,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Wall-clock budget per property, also used as the per-query limit.
    #[arg(long, default_value_t = 600_000)]
    timeout_ms: u64,
    #[arg(long, value_enum, default_value_t = LiaArg::Cooper)]
    lia_qe: LiaArg,
    /// Decide whether UNSAFE traces are real runs of the input.
    #[arg(long)]
    check_spurious: bool,
    #[arg(long, value_enum, default_value_t = StatsFormat::Text)]
    stats: StatsFormat,
    /// Log every cover computation step to standard error.
    #[arg(long)]
    debug_covers: bool,
    /// Properties checked in parallel (default: number of CPUs).
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mode = match self.mode {
            ModeArg::Inst => Mode::Inst,
            ModeArg::Transform => Mode::Transform,
            ModeArg::ExactPre => Mode::ExactPre,
        };
        let lia = match self.lia_qe {
            LiaArg::Cooper => rabmc::covers::LiaMode::Cooper,
            LiaArg::Instantiate => rabmc::covers::LiaMode::Instantiate,
        };
        RunConfig::new(self.solver.as_deref(), mode, lia, self)
    }
}

fn init_logging(debug_covers: bool) {
    let filter = if debug_covers { "rabmc::covers=debug" } else { "warn" };
    let filter = tracing_subscriber::EnvFilter::try_from_env("RABMC_LOG").unwrap_or_else(|_| filter.into());
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).without_time().init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let debug = match &cli.command {
        Command::Verify { run, .. } | Command::Bench { run, .. } => run.debug_covers,
        _ => false,
    };
    init_logging(debug);
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("rabmc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Verify { spec, properties, report_dir, run } => verify(&spec, &properties, report_dir, &run),
        Command::Transform { spec, stage, out, golden, bless } => transform(&spec, stage, out, golden, bless),
        Command::Bench { dir, csv, run } => bench::run(&dir, csv.as_deref(), &run.config()?, run.stats == StatsFormat::Json),
        Command::Oracle { spec, depth, index, id_extra, value_extra, arith_range, replay } => {
            let bounds = Bounds {
                id_extra,
                value_extra,
                index,
                arith: ArithDomain::Sampled(arith_range[0], arith_range[1]),
                ..Bounds::default()
            };
            oracle(&spec, depth, bounds, &replay)
        }
    }
}

fn verify(path: &PathBuf, properties: &[String], report_dir: Option<PathBuf>, args: &RunArgs) -> Result<u8, Failure> {
    let cfg = args.config()?;
    let spec = load_spec(path)?;
    let props: Vec<String> = if properties.is_empty() {
        spec.unsafe_props.iter().map(|u| u.name.to_string()).collect()
    } else {
        for p in properties {
            if spec.unsafe_prop(p).is_none() {
                return Err(Failure::input(format!("{}: no unsafe formula named `{p}`", path.display())));
            }
        }
        properties.to_vec()
    };
    let invariants = cfg.invariants(&spec, args.invariant_file.as_deref())?;
    let reports = cfg.pool()?.install(|| common::verify_all(&spec, &props, &invariants, &cfg))?;
    if let Some(dir) = &report_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for r in &reports {
            let file = dir.join(format!("{stem}.{}.json", r.property));
            fs::write(&file, r.to_json() + "\n").map_err(|e| Failure::input(format!("{}: {e}", file.display())))?;
        }
    }
    match args.stats {
        StatsFormat::Json => {
            let all: Vec<serde_json::Value> =
                reports.iter().map(|r| serde_json::to_value(r).expect("reports serialize")).collect();
            println!("{}", serde_json::to_string_pretty(&all).expect("reports serialize"));
        }
        StatsFormat::Text => print!("{}", table::summary(&reports)),
    }
    Ok(exit_code(reports.iter().map(|r| r.verdict.as_str())))
}

fn exit_code<'a>(verdicts: impl Iterator<Item = &'a str>) -> u8 {
    let mut code = 0;
    for v in verdicts {
        match v {
            "UNSAFE" => return 1,
            "BUDGET_EXCEEDED" => code = 4,
            _ => {}
        }
    }
    code
}

fn transform(path: &PathBuf, stage: Stage, out: Option<PathBuf>, golden: Option<PathBuf>, bless: bool) -> Result<u8, Failure> {
    let spec = load_spec(path)?;
    let (t, h) = eliminate_universal_guards(&spec).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let text = print_spec(match stage {
        Stage::Tilde => &t.spec,
        Stage::Hat => &h,
    });
    let write = |p: &PathBuf| fs::write(p, &text).map_err(|e| Failure::input(format!("{}: {e}", p.display())));
    match (out, golden) {
        (Some(p), _) => write(&p)?,
        (None, Some(g)) if bless => write(&g)?,
        (None, Some(g)) => {
            let expected = fs::read_to_string(&g).map_err(|e| Failure::input(format!("{}: {e}", g.display())))?;
            if expected != text {
                let line = expected.lines().zip(text.lines()).position(|(a, b)| a != b);
                let line = line.unwrap_or_else(|| expected.lines().count().min(text.lines().count())) + 1;
                eprintln!("{}: output differs from the golden file at line {line}", g.display());
                return Ok(1);
            }
        }
        (None, None) => print!("{text}"),
    }
    Ok(0)
}

fn oracle(path: &PathBuf, depth: usize, bounds: Bounds, replay: &[String]) -> Result<u8, Failure> {
    let spec = load_spec(path)?;
    let ex = Explorer::new(&spec, bounds).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let seq: Vec<_> = replay.iter().map(|s| rabmc::formula::ident(s)).collect();
    let res = ex
        .explore(depth, (!seq.is_empty()).then_some(&seq[..]))
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    println!(
        "{} database instances, {} states{}",
        res.instances,
        res.states,
        if res.saturated { ", saturated" } else { "" }
    );
    let mut code = 0;
    for u in &spec.unsafe_props {
        match res.trace(&Target::Unsafe(u.name.clone())) {
            Some(t) => {
                code = 1;
                println!("{}: reachable in {} steps", u.name, t.steps.len());
                print!("{}", ex.render(t));
            }
            None => println!("{}: not reached", u.name),
        }
    }
    for inv in &spec.invariants {
        match res.trace(&Target::Invariant(inv.name.clone())) {
            Some(t) => {
                code = 1;
                println!("invariant {}: violated after {} steps", inv.name, t.steps.len());
                print!("{}", ex.render(t));
            }
            None => println!("invariant {}: holds", inv.name),
        }
    }
    Ok(code)
}
