//! Plain-text summary tables.

use rabmc::engine::Report;

fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn summary(reports: &[Report]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.property.clone(),
                r.verdict.clone(),
                format!("{}ms", r.time_ms),
                r.nodes.to_string(),
                r.depth.to_string(),
                r.smt_calls.to_string(),
                r.spuriousness.clone().unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    render(&["property", "verdict", "time", "nodes", "depth", "smt_calls", "spurious"], &rows)
}

pub fn bench(rows: &[Vec<String>]) -> String {
    render(&["spec", "property", "expected", "verdict", "time", "nodes", "depth", "smt_calls"], rows)
}
