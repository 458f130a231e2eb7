//! Canonical text form of a spec. Reading it back gives an equal spec.

use std::fmt::Write;

use super::RabSpec;
use crate::formula::{SortKind, Var};

fn binders(vs: &[Var]) -> String {
    vs.iter().map(|v| format!(" ({} {})", v.name, v.sort)).collect()
}

pub fn print_spec(spec: &RabSpec) -> String {
    let mut s = String::new();
    let sig = &spec.signature;
    let _ = writeln!(s, "(theory {})", sig.theory.keyword());
    s.push('\n');
    for so in &sig.sorts {
        match so.kind {
            SortKind::Id => {
                let _ = writeln!(s, "(sort {} :id)", so.name);
            }
            SortKind::Value => {
                let _ = writeln!(s, "(sort {} :value)", so.name);
            }
            SortKind::Elem => {
                let e = &sig.elem_consts[&so.name];
                let _ = writeln!(s, "(sort {} :elem {} {})", so.name, e.t, e.f);
            }
            _ => {}
        }
    }
    for m in &spec.mem_sorts {
        let _ = writeln!(s, "(mem-sort {})", m.name);
    }
    if !sig.funs.is_empty() || !sig.rels.is_empty() || !sig.consts.is_empty() {
        s.push('\n');
    }
    for f in &sig.funs {
        let _ = writeln!(s, "(fun {} {} -> {})", f.name, f.domain, f.codomain);
    }
    for r in &sig.rels {
        let args: Vec<String> = r.args.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(s, "(rel {} {})", r.name, args.join(" "));
    }
    for c in &sig.consts {
        let _ = writeln!(s, "(const {} {})", c.name, c.sort);
    }
    s.push('\n');
    for v in &spec.vars {
        let _ = writeln!(s, "(var {} {})", v.name, v.sort);
    }
    for a in &spec.arrays {
        let _ = writeln!(s, "(arr {} {} -> {})", a.name, a.index, a.elem);
    }
    for a in &spec.alive {
        let _ = writeln!(s, "(alive {a})");
    }
    s.push_str("\n(init");
    for (x, c) in &spec.init.vars {
        let _ = write!(s, "\n  (= {x} {c})");
    }
    for (a, c) in &spec.init.arrays {
        let _ = write!(s, "\n  (= {a} (lambda {c}))");
    }
    s.push_str(")\n");
    for t in &spec.transitions {
        let _ = write!(s, "\n(transition {}", t.name);
        let _ = write!(s, "\n  (exists{})", binders(&t.index_vars));
        let _ = write!(s, "\n  (data{})", binders(&t.data_vars));
        let _ = write!(s, "\n  (guard {})", t.guard);
        if let Some(u) = &t.universal {
            let _ = write!(s, "\n  (uguard {} {})", u.var.name, u.guard);
        }
        s.push_str("\n  (update");
        for (x, f) in &t.var_updates {
            let _ = write!(s, "\n    (:= {x} {f})");
        }
        for u in &t.array_updates {
            let _ = write!(s, "\n    (:= {} (lambda {} {}))", u.array, u.param.name, u.body);
        }
        s.push_str("))\n");
    }
    if !spec.unsafe_props.is_empty() {
        s.push('\n');
    }
    for u in &spec.unsafe_props {
        let _ = writeln!(s, "(unsafe {} {})", u.name, u.formula);
    }
    if !spec.invariants.is_empty() {
        s.push('\n');
    }
    for i in &spec.invariants {
        let _ = writeln!(s, "(invariant {} (forall{}) {})", i.name, binders(&i.vars), i.body);
    }
    s
}
