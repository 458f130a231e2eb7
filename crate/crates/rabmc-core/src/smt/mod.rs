//! Satisfiability modulo the database theory with arithmetic, decided by an
//! external SMT-LIB solver.
//!
//! A [`Session`] owns one long-lived solver process. Declarations are made
//! once at the outermost level; each query runs between `push` and `pop`.

mod ef;
mod encode;
mod process;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{Formula, Ident};
use crate::spec::{ElemConsts, RabSpec};

pub use ef::{instantiate, to_exists_forall, ExistsForall, MAX_INSTANCES};
pub use process::{SolverConfig, SOLVER_ENV};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SmtError {
    #[error("no SMT solver found; pass --solver or set RABMC_SOLVER")]
    NotFound,
    #[error("cannot start solver `{path}`: {message}")]
    Spawn { path: String, message: String },
    #[error("solver crashed: {0}")]
    Crash(String),
    #[error("solver rejected a command: {0}")]
    Solver(String),
    #[error("solver returned unknown: {0}")]
    Unknown(String),
    #[error("solver timed out after {0} ms")]
    Timeout(u64),
    #[error("query outside the decidable fragment: {0}")]
    Fragment(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sat,
    Unsat,
}

impl Verdict {
    pub fn is_sat(self) -> bool {
        self == Verdict::Sat
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub queries: u64,
    pub time: Duration,
}

/// A query as sent to the solver, with its answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoggedQuery {
    pub script: String,
    pub verdict: Verdict,
}

pub struct Session {
    config: SolverConfig,
    proc: process::Process,
    declared: BTreeSet<String>,
    elem: BTreeMap<Ident, ElemConsts>,
    stats: SolverStats,
    log: Option<Vec<LoggedQuery>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("config", &self.config).field("stats", &self.stats).finish()
    }
}

impl Session {
    pub fn new(config: SolverConfig) -> Result<Session, SmtError> {
        let proc = process::Process::spawn(&config)?;
        let mut s = Session {
            config,
            proc,
            declared: BTreeSet::new(),
            elem: BTreeMap::new(),
            stats: SolverStats::default(),
            log: None,
        };
        let mut init = vec!["(set-option :print-success true)".to_string(), "(set-logic ALL)".to_string()];
        if s.config.timeout_ms > 0 {
            init.push(format!("(set-option :timeout {})", s.config.timeout_ms));
        }
        s.run_commands(&init)?;
        Ok(s)
    }

    /// A session that knows the flag sorts of `spec`.
    pub fn for_spec(config: SolverConfig, spec: &RabSpec) -> Result<Session, SmtError> {
        let mut s = Session::new(config)?;
        s.register_elem_sorts(&spec.signature.elem_consts);
        Ok(s)
    }

    pub fn register_elem_sorts(&mut self, m: &BTreeMap<Ident, ElemConsts>) {
        self.elem.extend(m.iter().map(|(k, v)| (k.clone(), v.clone())));
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn take_log(&mut self) -> Vec<LoggedQuery> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Send commands that each answer `success`.
    fn run_commands(&mut self, cmds: &[String]) -> Result<(), SmtError> {
        if cmds.is_empty() {
            return Ok(());
        }
        self.proc.send(cmds)?;
        let mut first_err = None;
        for _ in cmds {
            let r = self.proc.read()?;
            if r != "success" && r != "unsupported" && first_err.is_none() {
                first_err = Some(r);
            }
        }
        match first_err {
            Some(e) => Err(SmtError::Solver(e)),
            None => Ok(()),
        }
    }

    /// Satisfiability of a quantifier-free formula. Free variables are
    /// read existentially.
    pub fn check_sat_qf(&mut self, f: &Formula) -> Result<Verdict, SmtError> {
        if !f.is_quantifier_free() {
            return Err(SmtError::Fragment("check_sat_qf needs a quantifier-free formula".into()));
        }
        let start = Instant::now();
        let mut enc = encode::Encoder::new(&self.elem);
        let body = enc.formula(f)?;
        let (decls, axioms) = enc.finish();
        let mut new_decls = Vec::new();
        for (name, d) in &decls {
            if !self.declared.contains(name) {
                new_decls.push(d.clone());
            }
        }
        self.run_commands(&new_decls)?;
        self.declared.extend(decls.into_iter().map(|(n, _)| n));
        let mut cmds = vec!["(push 1)".to_string()];
        cmds.extend(axioms.iter().map(|a| format!("(assert {a})")));
        cmds.push(format!("(assert {body})"));
        let setup = cmds.len();
        cmds.push("(check-sat)".into());
        self.proc.send(&cmds)?;
        let mut err = None;
        for _ in 0..setup {
            let r = self.proc.read()?;
            if r != "success" && err.is_none() {
                err = Some(r);
            }
        }
        let answer = self.proc.read()?;
        let verdict = match (err, answer.as_str()) {
            (Some(e), _) => Err(SmtError::Solver(e)),
            (None, "sat") => Ok(Verdict::Sat),
            (None, "unsat") => Ok(Verdict::Unsat),
            (None, "unknown") => {
                self.proc.send(&["(get-info :reason-unknown)".into()])?;
                let reason = self.proc.read()?;
                if reason.contains("timeout") || reason.contains("canceled") {
                    Err(SmtError::Timeout(self.config.timeout_ms))
                } else {
                    Err(SmtError::Unknown(reason))
                }
            }
            (None, other) => Err(SmtError::Solver(other.to_string())),
        };
        self.run_commands(&["(pop 1)".into()])?;
        self.stats.queries += 1;
        self.stats.time += start.elapsed();
        let verdict = verdict?;
        if let Some(log) = &mut self.log {
            let d: Vec<String> = new_decls;
            log.push(LoggedQuery { script: encode::script(&d, &axioms, &body), verdict });
        }
        Ok(verdict)
    }

    /// Decide `∃∀` by instantiating the universal prefix; exact for the
    /// fragment where universals range over memory sorts.
    pub fn decide_exists_forall(&mut self, q: &ExistsForall) -> Result<Verdict, SmtError> {
        if let Some(v) = q.forall.iter().find(|v| !v.sort.is_memory()) {
            return Err(SmtError::Fragment(format!("universal variable `{}` is not an index", v.name)));
        }
        let ground = instantiate(q)?;
        self.check_sat_qf(&ground)
    }

    /// Satisfiability of any formula whose prenex form lies in the ∃∀ fragment.
    pub fn check_sat(&mut self, f: &Formula) -> Result<Verdict, SmtError> {
        if f.is_quantifier_free() {
            return self.check_sat_qf(f);
        }
        let q = to_exists_forall(f)?;
        self.decide_exists_forall(&q)
    }

    /// `T ⊨ lhs → rhs`.
    pub fn check_entailment(&mut self, lhs: &Formula, rhs: &Formula) -> Result<bool, SmtError> {
        let q = Formula::and(vec![lhs.clone(), Formula::not(rhs.clone())]);
        Ok(self.check_sat(&q)? == Verdict::Unsat)
    }

    /// Re-run logged scripts on a fresh process and collect the answers.
    pub fn replay(config: &SolverConfig, log: &[LoggedQuery]) -> Result<Vec<Verdict>, SmtError> {
        let mut s = Session::new(config.clone())?;
        let mut out = Vec::new();
        for q in log {
            let cmds: Vec<String> = q.script.lines().map(str::to_string).collect();
            let n = cmds.len();
            s.proc.send(&cmds)?;
            let mut answers = Vec::new();
            for _ in 0..n {
                answers.push(s.proc.read()?);
            }
            let v = answers.iter().find_map(|a| match a.as_str() {
                "sat" => Some(Verdict::Sat),
                "unsat" => Some(Verdict::Unsat),
                _ => None,
            });
            out.push(v.ok_or_else(|| SmtError::Solver(answers.join(" ")))?);
        }
        Ok(out)
    }
}
