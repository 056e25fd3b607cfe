//! Validity checking and countermodels through an external SMT-LIB 2 solver
//! process, one process per query.

pub mod sexp;
pub mod smt;
mod simplify;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::frontend::Expr;

pub use simplify::{fold, simplify};

pub const DEFAULT_TIMEOUT_MS: u64 = 3000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub path: String,
    pub args: Vec<String>,
    pub timeout_ms: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            path: std::env::var("DPFEEDBACK_SOLVER").unwrap_or_else(|_| "z3".into()),
            args: vec!["-in".into(), "-smt2".into()],
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Valid,
    Counterexample,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverVerdict {
    pub kind: VerdictKind,
    pub model: Option<BTreeMap<String, i64>>,
    pub elapsed_ms: u64,
    /// Why the answer is Unknown, when it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

impl SolverVerdict {
    fn unknown(start: Instant, why: impl Into<String>) -> SolverVerdict {
        SolverVerdict {
            kind: VerdictKind::Unknown,
            model: None,
            elapsed_ms: start.elapsed().as_millis() as u64,
            diagnostics: Some(why.into()),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.kind == VerdictKind::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("solver process failed: {0}")]
    SolverCrashed(String),
}

/// Builds the script asserting the negation of `f`.
pub fn script(f: &Expr, timeout_ms: u64) -> Result<(String, Vec<String>), String> {
    let body = smt::to_smt_bool(f)?;
    let syms: Vec<String> = smt::symbols(f).into_iter().collect();
    let logic = if smt::is_nonlinear(f) { "QF_NIA" } else { "QF_LIA" };
    let mut s = String::new();
    s.push_str("(set-option :produce-models true)\n");
    s.push_str(&format!("(set-option :timeout {timeout_ms})\n"));
    s.push_str(&format!("(set-logic {logic})\n"));
    for v in &syms {
        s.push_str(&format!("(declare-const {} Int)\n", smt::quote(v)));
    }
    s.push_str(&format!("(assert (not {body}))\n(check-sat)\n"));
    if !syms.is_empty() {
        let q: Vec<String> = syms.iter().map(|v| smt::quote(v)).collect();
        s.push_str(&format!("(get-value ({}))\n", q.join(" ")));
    }
    s.push_str("(exit)\n");
    Ok((s, syms))
}

fn run(cfg: &SolverConfig, input: String) -> Result<String, SolverError> {
    let mut child = Command::new(&cfg.path)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::SolverCrashed(format!("{}: {e}", cfg.path)))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
        drop(stdin);
        let mut out = String::new();
        let r = stdout.read_to_string(&mut out).map(|_| out);
        let _ = tx.send(r);
    });
    // The solver enforces the timeout itself; this is the hard stop.
    let hard = Duration::from_millis(cfg.timeout_ms + cfg.timeout_ms / 5 + 200);
    match rx.recv_timeout(hard) {
        Ok(Ok(out)) => {
            let _ = child.wait();
            Ok(out)
        }
        Ok(Err(e)) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(SolverError::SolverCrashed(e.to_string()))
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(SolverError::SolverCrashed("hard timeout".into()))
        }
    }
}

/// Is `f` valid? A countermodel is surfaced only after it has been checked to
/// falsify `f` by direct evaluation.
pub fn check_validity(f: &Expr, cfg: &SolverConfig) -> SolverVerdict {
    let start = Instant::now();
    let (text, syms) = match script(f, cfg.timeout_ms) {
        Ok(s) => s,
        Err(e) => return SolverVerdict::unknown(start, e),
    };
    let out = match run(cfg, text) {
        Ok(o) => o,
        Err(e) => return SolverVerdict::unknown(start, e.to_string()),
    };
    let items = match sexp::parse_all(&out) {
        Ok(i) => i,
        Err(e) => return SolverVerdict::unknown(start, format!("unreadable response: {e}")),
    };
    let elapsed_ms = start.elapsed().as_millis() as u64;
    match items.first().and_then(|s| s.as_atom()) {
        Some("unsat") => SolverVerdict { kind: VerdictKind::Valid, model: None, elapsed_ms, diagnostics: None },
        Some("sat") => {
            let mut model = BTreeMap::new();
            if let Some(sexp::Sexp::List(pairs)) = items.get(1) {
                for p in pairs {
                    if let sexp::Sexp::List(kv) = p {
                        if let (Some(k), Some(v)) = (kv.first().and_then(|k| k.as_atom()), kv.get(1).and_then(|v| v.as_int())) {
                            model.insert(k.to_string(), v);
                        }
                    }
                }
            }
            if syms.iter().any(|s| !model.contains_key(s)) {
                return SolverVerdict::unknown(start, "incomplete model");
            }
            match smt::eval(f, &model) {
                Some(0) => SolverVerdict { kind: VerdictKind::Counterexample, model: Some(model), elapsed_ms, diagnostics: None },
                _ => SolverVerdict::unknown(start, "model does not falsify the formula"),
            }
        }
        Some(other) => SolverVerdict::unknown(start, format!("solver answered {other}")),
        None => SolverVerdict::unknown(start, "empty response"),
    }
}

/// Is the solver binary usable?
pub fn available(cfg: &SolverConfig) -> bool {
    check_validity(&Expr::Bool(true), cfg).kind == VerdictKind::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn identity_is_valid() {
        assert_eq!(check_validity(&parse_expr("x == x").unwrap(), &cfg()).kind, VerdictKind::Valid);
    }

    #[test]
    fn countermodel_falsifies() {
        let f = parse_expr("x > 0 || x < -5").unwrap();
        let v = check_validity(&f, &cfg());
        assert_eq!(v.kind, VerdictKind::Counterexample);
        let m = v.model.unwrap();
        assert_eq!(smt::eval(&f, &m), Some(0));
    }

    #[test]
    fn nonlinear_query_runs() {
        let f = parse_expr("x * x >= 0").unwrap();
        assert_ne!(check_validity(&f, &cfg()).kind, VerdictKind::Counterexample);
    }

    #[test]
    fn missing_binary_is_unknown() {
        let c = SolverConfig { path: "/nonexistent/solver".into(), ..cfg() };
        let v = check_validity(&parse_expr("x == x").unwrap(), &c);
        assert_eq!(v.kind, VerdictKind::Unknown);
        assert!(v.diagnostics.unwrap().contains("/nonexistent/solver"));
    }

    #[test]
    fn timeout_is_honored() {
        // Hard nonlinear query with a tiny budget.
        let f = parse_expr("x * x * x + y * y * y != z * z * z || x <= 0 || y <= 0 || z <= 0").unwrap();
        let c = SolverConfig { timeout_ms: 1000, ..cfg() };
        let v = check_validity(&f, &c);
        assert!(v.elapsed_ms <= 1500, "took {} ms", v.elapsed_ms);
    }
}
