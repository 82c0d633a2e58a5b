//! Per-span nonlinear interference (NLI).
//!
//! Two estimators share the same inputs: a closed-form model ([`nli_cfm`])
//! fast enough for optimization loops, and a numerical integration of the
//! GN-model double integral ([`nli_numeric_gn`]) used to validate it. Both
//! return NLI power per channel referred to the span input, in mW.

mod cfm;
mod numeric;

pub use cfm::{nli_cfm, EffectiveProfile};
pub use numeric::{nli_numeric_gn, MIN_POINTS_PER_CHANNEL};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// SPM and per-interferer XPM split of a closed-form estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NliBreakdown<T> {
    pub spm_mw: Vec<T>,
    /// `xpm_mw[i][j]`: XPM on channel i caused by channel j (zero for i = j).
    pub xpm_mw: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NliContribution<T> {
    pub total_mw: Vec<T>,
    pub breakdown: Option<NliBreakdown<T>>,
}

impl<T: Scalar> NliContribution<T> {
    pub fn len(&self) -> usize {
        self.total_mw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_mw.is_empty()
    }

    /// Same contribution with every term multiplied by `k`.
    pub fn scaled(&self, k: T) -> Self {
        NliContribution {
            total_mw: self.total_mw.iter().map(|&v| v * k).collect(),
            breakdown: self.breakdown.as_ref().map(|b| NliBreakdown {
                spm_mw: b.spm_mw.iter().map(|&v| v * k).collect(),
                xpm_mw: b
                    .xpm_mw
                    .iter()
                    .map(|row| row.iter().map(|&v| v * k).collect())
                    .collect(),
            }),
        }
    }
}

/// Incoherent accumulation: element-wise sum over spans in span order.
pub fn accumulate_link_nli<T: Scalar>(per_span: &[NliContribution<T>]) -> Result<Vec<T>> {
    let first = per_span
        .first()
        .ok_or_else(|| Error::invalid("no spans to accumulate NLI over"))?;
    let n = first.len();
    let mut total = vec![T::zero(); n];
    for (s, contribution) in per_span.iter().enumerate() {
        if contribution.len() != n {
            return Err(Error::invalid(format!(
                "span {s} has {} NLI entries, expected {n}",
                contribution.len()
            )));
        }
        for (acc, &v) in total.iter_mut().zip(&contribution.total_mw) {
            *acc = *acc + v;
        }
    }
    Ok(total)
}
