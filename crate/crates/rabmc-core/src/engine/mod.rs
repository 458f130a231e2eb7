//! Backward reachability with approximated preimages.
//!
//! The frontier `P` starts as the cubes of the unsafe formula. Each round
//! drops cubes already covered by the accumulated set `B̃` (and by the
//! supplied invariants), stops with UNSAFE when a remaining cube meets the
//! initial states, and otherwise replaces `P` by the preimages of the
//! surviving cubes. An empty round is a fixpoint, and `¬B̃` is then a
//! universal invariant that excludes the unsafe states.

mod check;
mod report;
mod trace;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::covers::CoverConfig;
use crate::formula::{Cube, DnfError, Formula, Ident};
use crate::preimage::{eliminate_data, inst_pre_cubes, pre_cubes, raw_cubes, PreCubes, PreimageError};
use crate::smt::{Session, SmtError, Verdict};
use crate::spec::{Invariant, RabSpec};
use crate::transform::{eliminate_universal_guards, relativize_invariant, TransformError, TransformOutput};

pub use check::{
    audit_layers, check_certificate, check_invariant, extract_invariant, fixpoint_test, Certificate, InvariantCheck,
};
pub use report::{Report, REPORT_SCHEMA_VERSION};
pub use trace::{check_spurious, recheck_symbolic_trace, trace_formula, Recheck, Spuriousness};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Preimage(#[from] PreimageError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("no unsafe formula named `{0}`")]
    UnknownProperty(String),
    #[error("no transition named `{0}`")]
    UnknownTransition(String),
    #[error("exact preimages need a spec without universal guards (`{0}` has one)")]
    UniversalGuard(String),
    #[error("invariant certificate failed: {0}")]
    Certificate(String),
}

/// How preimages are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Instantiate universal guards over the occurring index variables.
    #[default]
    Inst,
    /// Remove universal guards by source transformation first.
    Transform,
    /// Exact preimages; only for specs without universal guards.
    ExactPre,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Inst => "inst",
            Mode::Transform => "transform",
            Mode::ExactPre => "exact-pre",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub mode: Mode,
    pub max_iters: usize,
    pub timeout: Duration,
    pub cover: CoverConfig,
    /// Universal invariants used to prune the frontier. They are trusted:
    /// check them with [`check_invariant`] first.
    pub invariants: Vec<Invariant>,
    pub check_spurious: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            mode: Mode::Inst,
            max_iters: 200,
            timeout: Duration::from_secs(600),
            cover: CoverConfig::default(),
            invariants: Vec::new(),
            check_spurious: false,
        }
    }
}

/// A cube of the search, with the transition that leads from it to its
/// parent. Roots are cubes of the unsafe formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub cube: Cube,
    pub parent: Option<usize>,
    pub via: Option<Ident>,
    pub depth: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub iterations: usize,
    /// Cubes accumulated in `B̃`.
    pub nodes: usize,
    pub depth: usize,
    pub smt_calls: u64,
    pub covers_approximate: bool,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Fixpoint reached; `¬B̃` is the invariant.
    Safe,
    Unsafe {
        /// Transition names in execution order.
        trace: Vec<Ident>,
        /// Node whose cube meets the initial states.
        witness: usize,
        recheck: Recheck,
        spurious: Spuriousness,
    },
    BudgetExceeded {
        reason: String,
    },
}

impl Outcome {
    pub fn verdict(&self) -> &'static str {
        match self {
            Outcome::Safe => "SAFE",
            Outcome::Unsafe { .. } => "UNSAFE",
            Outcome::BudgetExceeded { .. } => "BUDGET_EXCEEDED",
        }
    }

    pub fn is_safe(&self) -> bool {
        matches!(self, Outcome::Safe)
    }

    pub fn is_unsafe(&self) -> bool {
        matches!(self, Outcome::Unsafe { .. })
    }

    pub fn trace(&self) -> Option<&[Ident]> {
        match self {
            Outcome::Unsafe { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// One round of the search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layer {
    /// The frontier as computed, before pruning.
    pub frontier: Vec<Cube>,
    /// Nodes of the frontier that were not covered and joined `B̃`.
    pub kept: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Run {
    pub property: Ident,
    pub mode: Mode,
    /// The system that was searched: the input, or its transformation.
    pub spec: RabSpec,
    pub transform: Option<TransformOutput>,
    /// The unsafe formula of `spec`.
    pub unsafe_formula: Formula,
    /// Invariants as used for pruning, relativised in transform mode.
    pub invariants: Vec<Invariant>,
    pub nodes: Vec<Node>,
    pub layers: Vec<Layer>,
    /// Node ids of `B̃`, in the order they were added.
    pub accumulated: Vec<usize>,
    pub outcome: Outcome,
    pub stats: Stats,
}

impl Run {
    /// Cubes of `B̃`.
    pub fn accumulated_cubes(&self) -> Vec<Cube> {
        self.accumulated.iter().map(|&n| self.nodes[n].cube.clone()).collect()
    }

    /// Kept cubes of each layer.
    pub fn kept_layers(&self) -> Vec<Vec<Cube>> {
        self.layers.iter().map(|l| l.kept.iter().map(|&n| self.nodes[n].cube.clone()).collect()).collect()
    }
}

/// `¬c` for every cube.
fn negations(cubes: &[&Cube]) -> Vec<Formula> {
    cubes.iter().map(|c| Formula::not(c.to_formula())).collect()
}

/// The system actually searched in `mode`, with its unsafe formula and
/// pruning invariants.
pub fn prepare(
    spec: &RabSpec,
    property: &str,
    mode: Mode,
    invariants: &[Invariant],
) -> Result<(RabSpec, Option<TransformOutput>, Formula, Vec<Invariant>), EngineError> {
    if spec.unsafe_prop(property).is_none() {
        return Err(EngineError::UnknownProperty(property.to_string()));
    }
    match mode {
        Mode::Inst | Mode::ExactPre => {
            if mode == Mode::ExactPre {
                if let Some(t) = spec.transitions.iter().find(|t| t.universal.is_some()) {
                    return Err(EngineError::UniversalGuard(t.name.to_string()));
                }
            }
            let u = spec.unsafe_prop(property).expect("checked").formula.clone();
            Ok((spec.clone(), None, u, invariants.to_vec()))
        }
        Mode::Transform => {
            let (t, hat) = eliminate_universal_guards(spec)?;
            let u = hat.unsafe_prop(property).expect("kept by the transformation").formula.clone();
            let inv = invariants.iter().map(|i| relativize_invariant(&t.spec, i)).collect();
            Ok((hat, Some(t), u, inv))
        }
    }
}

struct Search<'a> {
    spec: &'a RabSpec,
    session: &'a mut Session,
    opts: &'a Options,
    init: Formula,
    invariants: Vec<Formula>,
    nodes: Vec<Node>,
    accumulated: Vec<usize>,
    layers: Vec<Layer>,
    approximate: bool,
}

impl Search<'_> {
    fn preimages(&mut self, node: usize) -> Result<Vec<(Ident, PreCubes)>, EngineError> {
        let mut out = Vec::new();
        let elem = &self.spec.signature.elem_consts;
        for tr in &self.spec.transitions {
            let cube = &self.nodes[node].cube;
            let p = match self.opts.mode {
                Mode::ExactPre => pre_cubes(tr, cube, elem, &self.opts.cover)?
                    .ok_or_else(|| EngineError::UniversalGuard(tr.name.to_string()))?,
                Mode::Inst | Mode::Transform => inst_pre_cubes(tr, cube, elem, &self.opts.cover)?,
            };
            out.push((tr.name.clone(), p));
        }
        Ok(out)
    }

    /// `c ∧ Inv ∧ ¬B̃` is satisfiable.
    fn uncovered(&mut self, c: &Cube) -> Result<bool, EngineError> {
        let acc: Vec<&Cube> = self.accumulated.iter().map(|&n| &self.nodes[n].cube).collect();
        if acc.contains(&c) {
            return Ok(false);
        }
        let mut parts = vec![c.to_formula()];
        parts.extend(self.invariants.iter().cloned());
        parts.extend(negations(&acc));
        Ok(self.session.check_sat(&Formula::and(parts))?.is_sat())
    }

    fn meets_init(&mut self, c: &Cube) -> Result<bool, EngineError> {
        let q = Formula::and(vec![self.init.clone(), c.to_formula()]);
        Ok(self.session.check_sat(&q)? == Verdict::Sat)
    }

    fn trace_of(&self, mut n: usize) -> Vec<Ident> {
        let mut out = Vec::new();
        while let Some(p) = self.nodes[n].parent {
            out.push(self.nodes[n].via.clone().expect("non-root nodes have a transition"));
            n = p;
        }
        out
    }

    fn root_of(&self, mut n: usize) -> usize {
        while let Some(p) = self.nodes[n].parent {
            n = p;
        }
        n
    }
}

/// Run the search for the unsafe formula `property` of `spec`.
pub fn breach(session: &mut Session, spec: &RabSpec, property: &str, opts: &Options) -> Result<Run, EngineError> {
    let start = Instant::now();
    let (searched, transform, unsafe_formula, invariants) = prepare(spec, property, opts.mode, &opts.invariants)?;
    session.register_elem_sorts(&searched.signature.elem_consts);
    let calls_before = session.stats().queries;

    let roots = eliminate_data(raw_cubes(&unsafe_formula)?, &searched.signature.elem_consts, &opts.cover)?;
    let mut search = Search {
        spec: &searched,
        session,
        opts,
        init: searched.init_formula(),
        invariants: invariants.iter().map(Invariant::to_formula).collect(),
        nodes: Vec::new(),
        accumulated: Vec::new(),
        layers: Vec::new(),
        approximate: roots.approximate,
    };
    let mut frontier: Vec<usize> = Vec::new();
    for c in roots.cubes {
        search.nodes.push(Node { cube: c, parent: None, via: None, depth: 0 });
        frontier.push(search.nodes.len() - 1);
    }

    let outcome = loop {
        if search.layers.len() >= opts.max_iters {
            break Outcome::BudgetExceeded { reason: format!("{} iterations", opts.max_iters) };
        }
        if start.elapsed() > opts.timeout {
            break Outcome::BudgetExceeded { reason: format!("{} ms", opts.timeout.as_millis()) };
        }
        let mut layer =
            Layer { frontier: frontier.iter().map(|&n| search.nodes[n].cube.clone()).collect(), kept: Vec::new() };
        for &n in &frontier {
            let c = search.nodes[n].cube.clone();
            if search.uncovered(&c)? {
                layer.kept.push(n);
            }
        }
        if layer.kept.is_empty() {
            search.layers.push(layer);
            break Outcome::Safe;
        }
        let mut hit = None;
        for &n in &layer.kept {
            let c = search.nodes[n].cube.clone();
            if search.meets_init(&c)? {
                hit = Some(n);
                break;
            }
        }
        search.accumulated.extend(layer.kept.iter().copied());
        let kept = layer.kept.clone();
        search.layers.push(layer);
        if let Some(n) = hit {
            let trace = search.trace_of(n);
            let root = search.root_of(n);
            let root_cube = search.nodes[root].cube.clone();
            let recheck = recheck_symbolic_trace(search.session, &searched, &trace, &root_cube)?;
            let spurious = if opts.check_spurious {
                check_spurious(search.session, spec, &original_trace(&transform, &trace), property)?
            } else {
                Spuriousness::Unknown
            };
            break Outcome::Unsafe { trace, witness: n, recheck, spurious };
        }

        let mut next = Vec::new();
        let mut seen: BTreeSet<Cube> = BTreeSet::new();
        let mut blowup = None;
        for n in kept {
            if start.elapsed() > opts.timeout {
                break;
            }
            let depth = search.nodes[n].depth + 1;
            let pres = match search.preimages(n) {
                Ok(p) => p,
                Err(EngineError::Preimage(PreimageError::Dnf(e @ DnfError::SizeBudgetExceeded { .. }))) => {
                    blowup = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            };
            for (via, p) in pres {
                search.approximate |= p.approximate;
                for c in p.cubes {
                    if seen.insert(c.clone()) {
                        search.nodes.push(Node { cube: c, parent: Some(n), via: Some(via.clone()), depth });
                        next.push(search.nodes.len() - 1);
                    }
                }
            }
        }
        if let Some(reason) = blowup {
            break Outcome::BudgetExceeded { reason };
        }
        frontier = next;
    };

    let stats = Stats {
        // the last fixpoint test of a SAFE run is not a round of its own
        iterations: search.layers.iter().filter(|l| !l.kept.is_empty()).count(),
        nodes: search.accumulated.len(),
        depth: search.accumulated.iter().map(|&n| search.nodes[n].depth).max().unwrap_or(0),
        smt_calls: search.session.stats().queries - calls_before,
        covers_approximate: search.approximate,
        elapsed: start.elapsed(),
    };
    let Search { nodes, accumulated, layers, .. } = search;
    Ok(Run {
        property: property.into(),
        mode: opts.mode,
        spec: searched,
        transform,
        unsafe_formula,
        invariants,
        nodes,
        layers,
        accumulated,
        outcome,
        stats,
    })
}

/// Transitions of the input spec along `trace`: crash steps added by the
/// transformation are dropped.
pub fn original_trace(transform: &Option<TransformOutput>, trace: &[Ident]) -> Vec<Ident> {
    match transform {
        None => trace.to_vec(),
        Some(t) => trace.iter().filter(|n| !t.crash.contains(n)).cloned().collect(),
    }
}
