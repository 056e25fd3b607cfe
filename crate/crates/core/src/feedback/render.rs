//! Plain-text rendering of a feedback report.

use super::{Correction, CorrectionKind, FeedbackReport, Section, Verdict};
use crate::frontend::{expr_to_string, BinOp, Expr};

fn section_name(s: Section) -> &'static str {
    match s {
        Section::Declaration => "declaration",
        Section::Input => "input",
        Section::Initialization => "initialization",
        Section::Update => "update",
        Section::Output => "output",
    }
}

fn guard_text(g: &Expr) -> String {
    let s = expr_to_string(g);
    match g {
        Expr::Binary(BinOp::And | BinOp::Or, ..) => format!("({s})"),
        _ => s,
    }
}

fn line_text(c: &Correction, n: usize) -> String {
    let body = match c.kind {
        CorrectionKind::Declaration => c.suggested.clone(),
        CorrectionKind::IterationSpace => {
            format!("Iterate as {} instead of {}", c.suggested, c.replaced.as_deref().unwrap_or("the current loops"))
        }
        CorrectionKind::TotalSubstitution => format!("Replace the whole body by: {}", c.suggested),
        CorrectionKind::OutOfBounds => match &c.guard {
            Some(g) => format!("Under guard {}, {}", guard_text(g), c.suggested),
            None => c.suggested.clone(),
        },
        _ => {
            let g = c.guard.as_ref().map_or("true".to_string(), guard_text);
            match &c.replaced {
                Some(r) => format!("Under guard {g}, compute {} instead of {r}.", c.suggested),
                None => format!("Under guard {g}, compute {}.", c.suggested),
            }
        }
    };
    match c.line {
        Some(l) if l > 0 && c.kind != CorrectionKind::Declaration => format!("{n}) {body} (line {l})"),
        _ => format!("{n}) {body}"),
    }
}

/// Numbered corrections grouped by section, or the verdict when there are
/// none.
pub fn render(report: &FeedbackReport) -> String {
    match report.verdict {
        Verdict::VerifiedCorrect => return format!("{}: verified correct\n", report.submission),
        Verdict::Unlabeled => {
            return format!(
                "{}: needs manual evaluation ({})\n",
                report.submission,
                report.reason.as_deref().unwrap_or("unsupported")
            )
        }
        Verdict::Faulty => {}
    }
    let mut out = String::new();
    let mut current = None;
    for (k, c) in report.corrections.iter().enumerate() {
        if current != Some(c.section) {
            out.push_str(&format!("In the {}:\n", section_name(c.section)));
            current = Some(c.section);
        }
        out.push_str("  ");
        out.push_str(&line_text(c, k + 1));
        out.push('\n');
    }
    out
}
