//! Configuration checks. Every problem is reported, not just the first.

use emspec::ensembles::CorrelationKind;
use emspec::theory::linear_response_warnings;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn error(field: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }

    fn warning(field: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

pub fn validate(c: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let kind = c.experiment;

    check_exponent(&mut out, "q", c.q());
    if let (Some(q), Some(a)) = (c.q, c.alpha) {
        if (q - 1.0 - a).abs() > 1e-15 * q.abs() {
            out.push(Diagnostic::error("alpha", format!("alpha {a} disagrees with q {q}")));
        }
    }
    if c.realizations == Some(0) {
        out.push(Diagnostic::error("realizations", "realizations must be at least 1"));
    }
    if let Some(v) = c.variance {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Diagnostic::error("variance", format!("variance {v} must be positive")));
        }
    }

    match kind {
        ExperimentKind::Portfolio => check_portfolio(&mut out, c),
        ExperimentKind::TheoryTable => check_theory_table(&mut out, c),
        _ => check_ensemble(&mut out, c),
    }

    if kind.compares_moments() && c.q() >= 1.0 && c.q().is_finite() {
        let horizons = match kind {
            ExperimentKind::TheoryTable => c.horizons(),
            _ => vec![c.horizon()],
        };
        let n = c.n_series().max(1) as f64;
        for t in horizons.into_iter().filter(|&t| t >= 1) {
            for w in linear_response_warnings(t, t as f64 / n, c.alpha()) {
                // one warning per condition, reported at the first horizon
                let condition = w.split_once(": ").map_or(w.as_str(), |(_, rest)| rest).to_string();
                if !out.iter().any(|d| d.message.ends_with(&condition)) {
                    out.push(Diagnostic::warning("q", w));
                }
            }
        }
    }
    out
}

fn check_exponent(out: &mut Vec<Diagnostic>, field: &str, q: f64) {
    if !q.is_finite() {
        out.push(Diagnostic::error(field, format!("exponent {q} is not finite")));
    } else if q < 1.0 {
        out.push(Diagnostic::error(field, format!("exponent below 1: q = {q}")));
    }
}

fn check_ensemble(out: &mut Vec<Diagnostic>, c: &ExperimentConfig) {
    let n = c.n_series();
    if n < 2 {
        out.push(Diagnostic::error("n_series", format!("N = {n} must be at least 2")));
    }
    if let Some(k) = c.kappa {
        if !(k > 0.0 && k.is_finite()) {
            out.push(Diagnostic::error("kappa", format!("kappa {k} must be positive")));
        } else if let Some(t) = c.horizon {
            if (t as f64 - k * n as f64).abs() > 0.5 {
                out.push(Diagnostic::error("kappa", format!("kappa {k} disagrees with T = {t} and N = {n}")));
            }
        }
    }
    if c.horizon() == 0 {
        out.push(Diagnostic::error("horizon", "T must be at least 1"));
    }
    let xi = c.xi();
    let expected = match c.experiment {
        ExperimentKind::WoeEmerging => matches!(xi, CorrelationKind::Identity),
        ExperimentKind::CwoeOneBlock => matches!(xi, CorrelationKind::OneBlock { .. }),
        ExperimentKind::CwoeBlocks => matches!(xi, CorrelationKind::BlockDiagonal { .. }),
        ExperimentKind::CwoeBanded => matches!(xi, CorrelationKind::Banded { .. }),
        _ => true,
    };
    if !expected {
        out.push(Diagnostic::error(
            "xi",
            format!("correlation kind does not match experiment {}", c.experiment.name()),
        ));
    }
    match &xi {
        CorrelationKind::OneBlock { c: coeff } | CorrelationKind::Banded { c: coeff } => check_coeff(out, *coeff),
        CorrelationKind::BlockDiagonal { blocks } => {
            for b in blocks {
                check_coeff(out, b.coeff);
                if b.size == 0 {
                    out.push(Diagnostic::error("xi", "block of size 0"));
                }
            }
            let total: usize = blocks.iter().map(|b| b.size).sum();
            if total != n {
                out.push(Diagnostic::error("xi", format!("block sizes sum to {total}, not N = {n}")));
            }
        }
        CorrelationKind::Identity => {}
    }
    if c.bins() == 0 {
        out.push(Diagnostic::error("histogram.bins", "at least one bin is required"));
    }
    for (field, range) in [("histogram.bulk_range", c.bulk_range()), ("histogram.emerging_range", c.emerging_range())] {
        if let Some((lo, hi)) = range {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                out.push(Diagnostic::error(field, format!("range [{lo}, {hi}] is empty")));
            }
        }
    }
    if let Some(e) = c.epsilon {
        if !(e > 0.0 && e.is_finite()) {
            out.push(Diagnostic::error("epsilon", format!("epsilon {e} must be positive")));
        }
    }
}

fn check_coeff(out: &mut Vec<Diagnostic>, c: f64) {
    if !(0.0..1.0).contains(&c) {
        out.push(Diagnostic::error("xi", format!("coefficient {c} outside [0, 1)")));
    }
}

fn check_portfolio(out: &mut Vec<Diagnostic>, c: &ExperimentConfig) {
    let horizons = c.horizons();
    if horizons.is_empty() {
        out.push(Diagnostic::error("horizons", "no horizons given"));
    }
    if let Some(&t) = horizons.iter().find(|&&t| t < 2) {
        out.push(Diagnostic::error("horizons", format!("horizon {t} is below 2")));
    }
    for q in c.q_grid() {
        check_exponent(out, "q_grid", q);
    }
    if c.q_grid().is_empty() {
        out.push(Diagnostic::error("q_grid", "no exponents given"));
    }
    let blocks = c.portfolio_blocks();
    for b in &blocks {
        check_coeff(out, b.coeff);
    }
    let n: usize = blocks.iter().map(|b| b.size).sum();
    if n < 2 {
        out.push(Diagnostic::error("blocks", "at least two assets are required"));
    }
    if let Some(m) = c.n_series {
        if m != n {
            out.push(Diagnostic::error("n_series", format!("N = {m} but blocks hold {n} assets")));
        }
    }
    let (lo, hi) = c.volatility_range();
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        out.push(Diagnostic::error("volatility_range", format!("range [{lo}, {hi}] is invalid")));
    }
}

fn check_theory_table(out: &mut Vec<Diagnostic>, c: &ExperimentConfig) {
    if c.n_series() < 1 {
        out.push(Diagnostic::error("n_series", "N must be positive"));
    }
    let horizons = c.horizons();
    if horizons.is_empty() {
        out.push(Diagnostic::error("horizons", "no horizons given"));
    }
    if let Some(&t) = horizons.iter().find(|&&t| t < 2) {
        out.push(Diagnostic::error("horizons", format!("horizon {t} is below 2")));
    }
    if let Some(CorrelationKind::OneBlock { c: coeff }) = c.xi {
        check_coeff(out, coeff);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_configs_are_clean() {
        for kind in [
            ExperimentKind::WoeEmerging,
            ExperimentKind::CwoeOneBlock,
            ExperimentKind::CwoeBlocks,
            ExperimentKind::CwoeBanded,
            ExperimentKind::Portfolio,
        ] {
            assert_eq!(validate(&ExperimentConfig::new(kind)), vec![], "{kind:?}");
        }
        let table = validate(&ExperimentConfig::new(ExperimentKind::TheoryTable));
        assert_eq!(table.len(), 1);
        assert!(table[0].message.ends_with("linear response unreliable at small kappa"));
    }

    #[test]
    fn exponent_below_one() {
        let mut c = ExperimentConfig::new(ExperimentKind::WoeEmerging);
        c.q = Some(0.5);
        let d = validate(&c);
        assert!(has_errors(&d));
        assert!(d.iter().any(|d| d.message.contains("exponent below 1")));
    }

    #[test]
    fn small_kappa_warns() {
        let mut c = ExperimentConfig::new(ExperimentKind::WoeEmerging);
        c.n_series = Some(1000);
        c.kappa = Some(0.05);
        let d = validate(&c);
        assert!(!has_errors(&d));
        assert!(d
            .iter()
            .any(|d| d.severity == Severity::Warning && d.message.contains("linear response unreliable at small kappa")));
    }

    #[test]
    fn reports_every_problem() {
        let mut c = ExperimentConfig::new(ExperimentKind::CwoeOneBlock);
        c.q = Some(0.2);
        c.realizations = Some(0);
        c.xi = Some(CorrelationKind::OneBlock { c: 1.5 });
        c.histogram = Some(crate::config::HistogramSpec {
            bins: Some(0),
            bulk_range: Some([2.0, 1.0]),
            emerging_range: None,
        });
        let fields: Vec<String> = validate(&c).into_iter().map(|d| d.field).collect();
        for f in ["q", "realizations", "xi", "histogram.bins", "histogram.bulk_range"] {
            assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn structural_mismatches() {
        let mut c = ExperimentConfig::new(ExperimentKind::CwoeBlocks);
        c.xi = Some(CorrelationKind::BlockDiagonal {
            blocks: vec![emspec::ensembles::Block::new(10, 0.5)],
        });
        assert!(validate(&c).iter().any(|d| d.message.contains("sum to 10")));
        let mut c = ExperimentConfig::new(ExperimentKind::CwoeBanded);
        c.xi = Some(CorrelationKind::Identity);
        assert!(has_errors(&validate(&c)));
        let mut p = ExperimentConfig::new(ExperimentKind::Portfolio);
        p.horizons = Some(vec![1, 50]);
        p.q_grid = Some(vec![0.9, 1.5]);
        assert_eq!(validate(&p).iter().filter(|d| d.severity == Severity::Error).count(), 2);
    }
}
