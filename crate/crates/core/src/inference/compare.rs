use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{log_evidence, AggregatedPoint, EvidenceResult, QuadSpec};
use crate::models::{default_priors, Baseline, ModelFamily};

/// Families within this many decades of the best are highlighted with it.
pub const HIGHLIGHT_GAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub family: ModelFamily,
    pub log10_evidence: f64,
    pub evidence: Option<EvidenceResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub highlight: BTreeSet<ModelFamily>,
}

/// The best family, plus the runner-up when it trails by at most half a decade.
pub fn highlight_families(evidences: &[(ModelFamily, f64)]) -> BTreeSet<ModelFamily> {
    let mut ranked: Vec<&(ModelFamily, f64)> = evidences.iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = BTreeSet::new();
    if let Some(best) = ranked.first() {
        out.insert(best.0);
        if let Some(second) = ranked.get(1) {
            if best.1 - second.1 <= HIGHLIGHT_GAP {
                out.insert(second.0);
            }
        }
    }
    out
}

impl ComparisonTable {
    /// Builds a table from precomputed log₁₀ evidences.
    pub fn from_evidences(evidences: &[(ModelFamily, f64)]) -> Result<Self> {
        if evidences.is_empty() {
            return Err(Error::Argument("comparison needs at least one family".into()));
        }
        if let Some((f, v)) = evidences.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Numerical(format!("log10 evidence of {f} is {v}")));
        }
        Ok(Self {
            rows: evidences
                .iter()
                .map(|&(family, log10_evidence)| ComparisonRow {
                    family,
                    log10_evidence,
                    evidence: None,
                })
                .collect(),
            highlight: highlight_families(evidences),
        })
    }

    pub fn best(&self) -> ModelFamily {
        self.rows
            .iter()
            .max_by(|a, b| a.log10_evidence.total_cmp(&b.log10_evidence).then(b.family.cmp(&a.family)))
            .map(|r| r.family)
            .expect("table has rows")
    }

    pub fn get(&self, family: ModelFamily) -> Option<f64> {
        self.rows.iter().find(|r| r.family == family).map(|r| r.log10_evidence)
    }

    /// `function,log10_evidence,highlight`, one row per family.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("function,log10_evidence,highlight\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.4},{}",
                r.family,
                r.log10_evidence,
                self.highlight.contains(&r.family)
            );
        }
        s
    }
}

/// Evidences of all four families under their default priors.
pub fn compare_models(points: &[AggregatedPoint], base: Baseline, quad: &QuadSpec) -> Result<ComparisonTable> {
    let results: Vec<Result<EvidenceResult>> = ModelFamily::ALL
        .par_iter()
        .map(|&family| {
            let priors = default_priors(family, base)?;
            log_evidence(points, family, &priors, base, quad)
        })
        .collect();
    let mut rows = Vec::with_capacity(4);
    for (family, r) in ModelFamily::ALL.into_iter().zip(results) {
        let e = r?;
        rows.push(ComparisonRow {
            family,
            log10_evidence: e.log10_evidence,
            evidence: Some(e),
        });
    }
    let pairs: Vec<(ModelFamily, f64)> = rows.iter().map(|r| (r.family, r.log10_evidence)).collect();
    Ok(ComparisonTable {
        highlight: highlight_families(&pairs),
        rows,
    })
}
