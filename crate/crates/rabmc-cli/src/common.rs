//! Loading specs and running the engine per property.

use std::fs;
use std::path::Path;
use std::time::Duration;

use rabmc::covers::{CoverConfig, LiaMode};
use rabmc::engine::{breach, check_certificate, check_invariant, EngineError, Mode, Options, Report};
use rabmc::smt::{Session, SmtError, SolverConfig, SOLVER_ENV};
use rabmc::spec::{check_source, parse, parse_extra_invariants, Invariant, RabSpec, Severity};
use rayon::prelude::*;

use crate::RunArgs;

/// A message and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    pub fn solver(e: &SmtError) -> Failure {
        let hint = match e {
            SmtError::Spawn { .. } => {
                format!("; install z3, or set {SOLVER_ENV} (or --solver) to the solver binary")
            }
            _ => String::new(),
        };
        Failure { code: 3, message: format!("{e}{hint}") }
    }

    fn engine(prop: &str, e: EngineError) -> Failure {
        match e {
            EngineError::Smt(s) => {
                let mut f = Failure::solver(&s);
                f.message = format!("{prop}: {}", f.message);
                f
            }
            other => Failure::input(format!("{prop}: {other}")),
        }
    }
}

pub fn load_spec(path: &Path) -> Result<RabSpec, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let errors: Vec<String> = check_source(&src)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| format!("{}:{d}", path.display()))
        .collect();
    if !errors.is_empty() {
        return Err(Failure::input(errors.join("\n")));
    }
    parse(&src).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub struct RunConfig {
    pub solver: SolverConfig,
    pub options: Options,
    pub jobs: Option<usize>,
    pub declared: bool,
}

impl RunConfig {
    pub fn new(solver: Option<&Path>, mode: Mode, lia: LiaMode, args: &RunArgs) -> Result<RunConfig, Failure> {
        let solver = SolverConfig::resolve(solver).map_err(|e| Failure::solver(&e))?.with_timeout(args.timeout_ms);
        let options = Options {
            mode,
            max_iters: args.max_iters,
            timeout: Duration::from_millis(args.timeout_ms),
            cover: CoverConfig { lia, debug: args.debug_covers, ..CoverConfig::default() },
            invariants: Vec::new(),
            check_spurious: args.check_spurious,
        };
        Ok(RunConfig { solver, options, jobs: args.jobs, declared: !args.no_declared_invariants })
    }

    pub fn session(&self, spec: &RabSpec) -> Result<Session, Failure> {
        Session::for_spec(self.solver.clone(), spec).map_err(|e| Failure::solver(&e))
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            b = b.num_threads(n.max(1));
        }
        b.build().map_err(|e| Failure::input(format!("cannot start worker threads: {e}")))
    }

    /// Declared invariants (unless disabled) plus those of `file`.
    /// Invariants that fail initiation or consecution are reported and
    /// left out.
    pub fn invariants(&self, spec: &RabSpec, file: Option<&Path>) -> Result<Vec<Invariant>, Failure> {
        let mut all = if self.declared { spec.invariants.clone() } else { Vec::new() };
        if let Some(f) = file {
            let src = fs::read_to_string(f).map_err(|e| Failure::input(format!("{}: {e}", f.display())))?;
            all.extend(parse_extra_invariants(spec, &src).map_err(|e| Failure::input(format!("{}: {e}", f.display())))?);
        }
        if all.is_empty() {
            return Ok(all);
        }
        let mut s = self.session(spec)?;
        let mut kept = Vec::new();
        for inv in all {
            let c = check_invariant(&mut s, spec, &inv, None).map_err(|e| Failure::engine(&inv.name, e))?;
            if c.is_invariant() {
                kept.push(inv);
            } else {
                let why = if c.initiation { format!("not preserved by {}", c.failing.join(", ")) } else { "fails initially".into() };
                eprintln!("rabmc: invariant `{}` {why}; not used", inv.name);
            }
        }
        Ok(kept)
    }
}

/// Run one property with its own solver session.
pub fn verify_one(spec: &RabSpec, prop: &str, invariants: &[Invariant], cfg: &RunConfig) -> Result<Report, Failure> {
    let mut s = cfg.session(spec)?;
    let opts = Options { invariants: invariants.to_vec(), ..cfg.options.clone() };
    let run = breach(&mut s, spec, prop, &opts).map_err(|e| Failure::engine(prop, e))?;
    let cert = if run.outcome.is_safe() {
        let c = check_certificate(&mut s, &run.spec, &run.accumulated_cubes(), &run.invariants, &run.unsafe_formula)
            .map_err(|e| Failure::engine(prop, e))?;
        Some(c)
    } else {
        None
    };
    Ok(Report::new(&run, cert.as_ref()))
}

/// Every property in parallel on the current pool, in input order.
pub fn verify_all(spec: &RabSpec, props: &[String], invariants: &[Invariant], cfg: &RunConfig) -> Result<Vec<Report>, Failure> {
    props.par_iter().map(|p| verify_one(spec, p, invariants, cfg)).collect()
}
