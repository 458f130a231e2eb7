//! Machine-readable run reports.

use serde::{Deserialize, Serialize};

use super::{Certificate, Outcome, Run};

/// Bumped whenever a field is renamed or removed.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub property: String,
    pub mode: String,
    /// `SAFE`, `UNSAFE` or `BUDGET_EXCEEDED`.
    pub verdict: String,
    pub iterations: usize,
    pub nodes: usize,
    pub depth: usize,
    pub smt_calls: u64,
    pub covers_approximate: bool,
    pub time_ms: u64,
    /// Transition names of the unsafe trace, in execution order.
    pub trace: Option<Vec<String>>,
    /// `genuine`, `spurious` or `unknown` for UNSAFE runs.
    pub spuriousness: Option<String>,
    /// Backward recheck of the unsafe trace.
    pub recheck: Option<String>,
    /// `passed`, `failed` or `not-checked` for SAFE runs.
    pub certificate: Option<String>,
    pub budget: Option<String>,
}

impl Report {
    pub fn new(run: &Run, certificate: Option<&Certificate>) -> Report {
        let (trace, spuriousness, recheck, budget) = match &run.outcome {
            Outcome::Safe => (None, None, None, None),
            Outcome::Unsafe { trace, recheck, spurious, .. } => (
                Some(trace.iter().map(|t| t.to_string()).collect()),
                Some(spurious.name().to_string()),
                Some(recheck.name().to_string()),
                None,
            ),
            Outcome::BudgetExceeded { reason } => (None, None, None, Some(reason.clone())),
        };
        let certificate = match (&run.outcome, certificate) {
            (Outcome::Safe, Some(c)) if c.holds() => Some("passed".to_string()),
            (Outcome::Safe, Some(_)) => Some("failed".to_string()),
            (Outcome::Safe, None) => Some("not-checked".to_string()),
            _ => None,
        };
        Report {
            schema: REPORT_SCHEMA_VERSION,
            property: run.property.to_string(),
            mode: run.mode.name().to_string(),
            verdict: run.outcome.verdict().to_string(),
            iterations: run.stats.iterations,
            nodes: run.stats.nodes,
            depth: run.stats.depth,
            smt_calls: run.stats.smt_calls,
            covers_approximate: run.stats.covers_approximate,
            time_ms: run.stats.elapsed.as_millis() as u64,
            trace,
            spuriousness,
            recheck,
            certificate,
            budget,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }
}
