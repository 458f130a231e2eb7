//! Child-process plumbing for an SMT-LIB 2.6 solver.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::SmtError;

/// Environment variable naming the solver executable.
pub const SOLVER_ENV: &str = "RABMC_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    /// Per-query limit in milliseconds; 0 disables it.
    pub timeout_ms: u64,
}

fn default_args(path: &Path) -> Vec<String> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    if stem.contains("cvc5") || stem.contains("cvc4") {
        vec!["--lang=smt2".into(), "--incremental".into()]
    } else {
        vec!["-in".into(), "-smt2".into()]
    }
}

fn on_path(name: &str) -> Option<PathBuf> {
    let paths = std::env::var_os("PATH")?;
    std::env::split_paths(&paths).map(|d| d.join(name)).find(|p| p.is_file())
}

impl SolverConfig {
    pub fn new(path: impl Into<PathBuf>) -> SolverConfig {
        let path = path.into();
        SolverConfig { args: default_args(&path), path, timeout_ms: 30_000 }
    }

    /// Explicit path first, then `RABMC_SOLVER`, then `z3` and `cvc5` on `PATH`.
    pub fn resolve(explicit: Option<&Path>) -> Result<SolverConfig, SmtError> {
        if let Some(p) = explicit {
            return Ok(SolverConfig::new(p));
        }
        if let Some(p) = std::env::var_os(SOLVER_ENV).filter(|p| !p.is_empty()) {
            return Ok(SolverConfig::new(PathBuf::from(p)));
        }
        ["z3", "cvc5"]
            .iter()
            .find_map(|n| on_path(n))
            .map(SolverConfig::new)
            .ok_or(SmtError::NotFound)
    }

    pub fn with_timeout(mut self, ms: u64) -> SolverConfig {
        self.timeout_ms = ms;
        self
    }
}

pub(crate) struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    /// How long to wait for any single response before killing the solver.
    watchdog: Option<Duration>,
}

fn balance(s: &str) -> i64 {
    let mut depth = 0;
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => depth += 1,
            ')' if !in_str => depth -= 1,
            _ => {}
        }
    }
    depth
}

impl Process {
    pub(crate) fn spawn(cfg: &SolverConfig) -> Result<Process, SmtError> {
        let mut child = Command::new(&cfg.path)
            .args(&cfg.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn { path: cfg.path.display().to_string(), message: e.to_string() })?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let (tx, rx) = channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let watchdog = (cfg.timeout_ms > 0).then(|| Duration::from_millis(cfg.timeout_ms + 5_000));
        Ok(Process { child, stdin, lines: rx, watchdog })
    }

    pub(crate) fn send(&mut self, cmds: &[String]) -> Result<(), SmtError> {
        let mut buf = String::new();
        for c in cmds {
            buf.push_str(c);
            buf.push('\n');
        }
        self.stdin
            .write_all(buf.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SmtError::Crash(e.to_string()))
    }

    /// One complete response: a bare atom or a balanced s-expression.
    pub(crate) fn read(&mut self) -> Result<String, SmtError> {
        let mut acc = String::new();
        loop {
            let line = match self.watchdog {
                Some(d) => match self.lines.recv_timeout(d) {
                    Ok(l) => l,
                    Err(RecvTimeoutError::Timeout) => {
                        let _ = self.child.kill();
                        return Err(SmtError::Timeout(d.as_millis() as u64));
                    }
                    Err(RecvTimeoutError::Disconnected) => return Err(self.exit_error()),
                },
                None => self.lines.recv().map_err(|_| self.exit_error())?,
            };
            if line.trim().is_empty() && acc.is_empty() {
                continue;
            }
            if !acc.is_empty() {
                acc.push('\n');
            }
            acc.push_str(&line);
            if balance(&acc) <= 0 {
                return Ok(acc.trim().to_string());
            }
        }
    }

    fn exit_error(&mut self) -> SmtError {
        match self.child.try_wait() {
            Ok(Some(status)) => SmtError::Crash(format!("solver exited with {status}")),
            _ => SmtError::Crash("solver closed its output".into()),
        }
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
