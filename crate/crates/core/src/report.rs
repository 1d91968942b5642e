//! Residual reports shared by the identity suite, integral checks and the CLI.

use serde::Serialize;

/// Outcome of one named residual check over a sample set.
///
/// `pass` is `max_residual <= tol`; a report is skipped (with a reason) only
/// when no samples apply, and skips count as successes.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    /// Short formula text identifying what was checked.
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub skipped: Option<String>,
}

impl IdentityReport {
    pub fn from_residuals(
        identity: &str,
        anchor: &str,
        residuals: &[f64],
        tol: f64,
    ) -> IdentityReport {
        let samples = residuals.len();
        let max = residuals.iter().cloned().fold(0.0_f64, f64::max);
        let mean = if samples == 0 {
            0.0
        } else {
            residuals.iter().sum::<f64>() / samples as f64
        };
        IdentityReport {
            identity: identity.to_string(),
            anchor: anchor.to_string(),
            samples,
            max_residual: max,
            mean_residual: mean,
            tol,
            pass: max <= tol,
            skipped: None,
        }
    }

    pub fn skipped(identity: &str, anchor: &str, tol: f64, reason: impl Into<String>) -> Self {
        IdentityReport {
            identity: identity.to_string(),
            anchor: anchor.to_string(),
            samples: 0,
            max_residual: 0.0,
            mean_residual: 0.0,
            tol,
            pass: true,
            skipped: Some(reason.into()),
        }
    }
}

/// One row of CLI output: a report tagged with its case.
#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub identity: String,
    pub anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub skipped: Option<String>,
}

impl CaseReport {
    pub fn new(case: &str, r: IdentityReport) -> CaseReport {
        CaseReport {
            case: case.to_string(),
            identity: r.identity,
            anchor: r.anchor,
            samples: r.samples,
            max_residual: r.max_residual,
            mean_residual: r.mean_residual,
            tol: r.tol,
            pass: r.pass,
            skipped: r.skipped,
        }
    }
}

/// All floating-point text output uses 17 significant digits so reports are
/// diff-stable across platforms.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render reports as an aligned text table, one line per report.
pub fn render_text(rows: &[CaseReport]) -> String {
    let mut out = String::new();
    for r in rows {
        let verdict = match (&r.skipped, r.pass) {
            (Some(reason), _) => format!("SKIP ({reason})"),
            (None, true) => "PASS".to_string(),
            (None, false) => "FAIL".to_string(),
        };
        out.push_str(&format!(
            "{:<24} {:<22} samples {:>6}  max {}  mean {}  tol {}  {}\n",
            r.case,
            r.identity,
            r.samples,
            fmt_float(r.max_residual),
            fmt_float(r.mean_residual),
            fmt_float(r.tol),
            verdict
        ));
    }
    out
}

/// Render reports as a JSON array (schema: case, identity, anchor, samples,
/// max_residual, mean_residual, tol, pass, skipped).
pub fn render_json(rows: &[CaseReport]) -> String {
    serde_json::to_string_pretty(rows).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_max_below_tol() {
        let r = IdentityReport::from_residuals("x", "a", &[1e-9, 5e-7], 1e-6);
        assert!(r.pass);
        assert_eq!(r.samples, 2);
        let r = IdentityReport::from_residuals("x", "a", &[1e-9, 5e-5], 1e-6);
        assert!(!r.pass);
    }

    #[test]
    fn skip_has_zero_samples_and_passes() {
        let r = IdentityReport::skipped("x", "a", 1e-6, "r < 2");
        assert_eq!(r.samples, 0);
        assert!(r.pass);
        assert_eq!(r.skipped.as_deref(), Some("r < 2"));
    }

    #[test]
    fn floats_have_17_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(0.1).len(), "1.0000000000000001e-1".len());
    }
}
