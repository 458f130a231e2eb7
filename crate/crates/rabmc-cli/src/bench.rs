//! The benchmark harness: a directory of specs with expected verdicts.
//!
//! The CSV has one `property` row per checked property, one `spec` row per
//! spec and a final `all` row. Timing columns follow the usual
//! mean/max/standard deviation layout; the other counters are averages.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rabmc::corpus::{list_specs, load_expectations};
use rabmc::engine::Report;
use rabmc::spec::{Invariant, RabSpec};
use rayon::prelude::*;

use crate::common::{load_spec, verify_one, Failure, RunConfig};
use crate::table;

const HEADER: [&str; 12] = [
    "row",
    "spec",
    "property",
    "expected",
    "verdict",
    "match",
    "mean_time_ms",
    "max_time_ms",
    "stdev_time_ms",
    "avg_nodes",
    "avg_depth",
    "avg_smt_calls",
];

struct Entry {
    spec: usize,
    property: String,
    expected: Option<String>,
}

struct Loaded {
    name: String,
    spec: RabSpec,
    invariants: Vec<Invariant>,
}

fn stats(rs: &[&Report]) -> [String; 6] {
    let n = rs.len().max(1) as f64;
    let times: Vec<f64> = rs.iter().map(|r| r.time_ms as f64).collect();
    let mean = times.iter().sum::<f64>() / n;
    let max = times.iter().copied().fold(0.0, f64::max);
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let avg = |f: &dyn Fn(&Report) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
    [
        format!("{mean:.1}"),
        format!("{max:.0}"),
        format!("{:.1}", var.sqrt()),
        format!("{:.2}", avg(&|r| r.nodes as f64)),
        format!("{:.2}", avg(&|r| r.depth as f64)),
        format!("{:.2}", avg(&|r| r.smt_calls as f64)),
    ]
}

fn name_of(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(dir: &Path, csv_out: Option<&Path>, cfg: &RunConfig, json: bool) -> Result<u8, Failure> {
    let paths: Vec<PathBuf> = list_specs(dir).map_err(|e| Failure::input(e.to_string()))?;
    let mut specs = Vec::new();
    let mut entries = Vec::new();
    for p in &paths {
        let spec = load_spec(p)?;
        let expect = load_expectations(p).map_err(|e| Failure::input(e.to_string()))?;
        match expect {
            Some(es) => {
                for e in es {
                    if spec.unsafe_prop(&e.property).is_none() {
                        return Err(Failure::input(format!("{}: no unsafe formula named `{}`", p.display(), e.property)));
                    }
                    entries.push(Entry { spec: specs.len(), property: e.property, expected: Some(e.verdict) });
                }
            }
            None => {
                for u in &spec.unsafe_props {
                    entries.push(Entry { spec: specs.len(), property: u.name.to_string(), expected: None });
                }
            }
        }
        let invariants = cfg.invariants(&spec, None)?;
        specs.push(Loaded { name: name_of(p), spec, invariants });
    }

    let reports: Vec<Report> = cfg.pool()?.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let l = &specs[e.spec];
                verify_one(&l.spec, &e.property, &l.invariants, cfg)
            })
            .collect::<Result<_, _>>()
    })?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::input(format!("cannot write CSV: {e}"));
    let mut mismatches = 0;
    let mut human = Vec::new();
    if !paths.is_empty() {
        w.write_record(HEADER).map_err(csv_err)?;
    }
    for (si, l) in specs.iter().enumerate() {
        let mine: Vec<(&Entry, &Report)> = entries.iter().zip(&reports).filter(|(e, _)| e.spec == si).collect();
        let mut all_ok = true;
        for (e, r) in &mine {
            let ok = e.expected.as_ref().is_none_or(|x| *x == r.verdict);
            all_ok &= ok;
            if !ok {
                mismatches += 1;
                eprintln!("rabmc: {} {}: expected {}, got {}", l.name, e.property, e.expected.as_deref().unwrap_or("-"), r.verdict);
            }
            let s = stats(&[*r]);
            let mut rec = vec!["property".to_string(), l.name.clone(), e.property.clone()];
            rec.push(e.expected.clone().unwrap_or_default());
            rec.push(r.verdict.clone());
            rec.push(ok.to_string());
            rec.extend(s);
            w.write_record(&rec).map_err(csv_err)?;
            human.push(vec![
                l.name.clone(),
                e.property.clone(),
                e.expected.clone().unwrap_or_else(|| "-".into()),
                r.verdict.clone(),
                format!("{}ms", r.time_ms),
                r.nodes.to_string(),
                r.depth.to_string(),
                r.smt_calls.to_string(),
            ]);
        }
        let rs: Vec<&Report> = mine.iter().map(|(_, r)| *r).collect();
        let mut rec = vec!["spec".to_string(), l.name.clone(), String::new(), String::new(), String::new(), all_ok.to_string()];
        rec.extend(stats(&rs));
        w.write_record(&rec).map_err(csv_err)?;
    }
    if !paths.is_empty() {
        let rs: Vec<&Report> = reports.iter().collect();
        let mut rec = vec!["all".to_string(), String::new(), String::new(), String::new(), String::new(), (mismatches == 0).to_string()];
        rec.extend(stats(&rs));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::input(format!("cannot write CSV: {e}")))?;
    match csv_out {
        Some(p) => fs::write(p, &bytes).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?,
        None => std::io::stdout().write_all(&bytes).map_err(|e| Failure::input(format!("standard output: {e}")))?,
    }
    if json {
        let all: Vec<serde_json::Value> = reports.iter().map(|r| serde_json::to_value(r).expect("reports serialize")).collect();
        eprintln!("{}", serde_json::to_string_pretty(&all).expect("reports serialize"));
    } else if !human.is_empty() {
        eprint!("{}", table::bench(&human));
    }
    Ok(u8::from(mismatches > 0))
}
