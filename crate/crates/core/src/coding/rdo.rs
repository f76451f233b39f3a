//! Mode selection over candidate truncation widths.

use rayon::prelude::*;

use super::codec::AnalyzedCloud;
use super::quant::lambda_from_qp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdoCandidate {
    pub mode: u16,
    pub rate_bits: u64,
    pub distortion: f64,
    /// `D + λR` for Lagrangian selection, `D` for constrained selection.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianChoice {
    pub selected: u16,
    pub lambda: f64,
    pub candidates: Vec<RdoCandidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedChoice {
    pub selected: u16,
    /// False when no candidate meets the rate limit; the cheapest one is
    /// selected instead.
    pub feasible: bool,
    pub candidates: Vec<RdoCandidate>,
}

fn evaluate(analyzed: &AnalyzedCloud, qp: u16, modes: &[u16]) -> Result<Vec<(u16, u64, f64)>> {
    if modes.is_empty() {
        return Err(Error::InvalidParameter("no mode candidates".into()));
    }
    modes
        .par_iter()
        .map(|&x| {
            let e = analyzed.encode_mode(qp, x)?;
            Ok((x, e.rate_bits(), e.distortion))
        })
        .collect()
}

/// `x* = argmin D(x) + λ R(x)` with `λ = m · 2^(qp/6)`; ties go to the
/// smaller `x`.
pub fn rdo_select_lagrangian(analyzed: &AnalyzedCloud, qp: u16, m: f64, modes: &[u16]) -> Result<LagrangianChoice> {
    let lambda = lambda_from_qp(qp, m);
    let candidates: Vec<RdoCandidate> = evaluate(analyzed, qp, modes)?
        .into_iter()
        .map(|(mode, rate_bits, distortion)| RdoCandidate {
            mode,
            rate_bits,
            distortion,
            cost: distortion + lambda * rate_bits as f64,
        })
        .collect();
    let best = candidates
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.mode.cmp(&b.mode)))
        .unwrap();
    Ok(LagrangianChoice {
        selected: best.mode,
        lambda,
        candidates,
    })
}

/// `x* = argmin D(x)` subject to `R(x) <= max_bpp · N`; ties go to the
/// smaller `x`. Falls back to the lowest-rate candidate when none fits.
pub fn rdo_select_constrained(
    analyzed: &AnalyzedCloud,
    qp: u16,
    modes: &[u16],
    max_bpp: f64,
) -> Result<ConstrainedChoice> {
    let budget = max_bpp * analyzed.point_count() as f64;
    let candidates: Vec<RdoCandidate> = evaluate(analyzed, qp, modes)?
        .into_iter()
        .map(|(mode, rate_bits, distortion)| RdoCandidate {
            mode,
            rate_bits,
            distortion,
            cost: distortion,
        })
        .collect();
    let best_feasible = candidates
        .iter()
        .filter(|c| c.rate_bits as f64 <= budget)
        .min_by(|a, b| a.distortion.total_cmp(&b.distortion).then(a.mode.cmp(&b.mode)));
    let (selected, feasible) = match best_feasible {
        Some(c) => (c.mode, true),
        None => {
            let c = candidates
                .iter()
                .min_by(|a, b| a.rate_bits.cmp(&b.rate_bits).then(a.mode.cmp(&b.mode)))
                .unwrap();
            (c.mode, false)
        }
    };
    Ok(ConstrainedChoice {
        selected,
        feasible,
        candidates,
    })
}
