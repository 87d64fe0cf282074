//! Brute-force concavification: maximize `Σ_i w_i (v_u(μ_i) − c(μ_i))` over
//! Bayes-plausible weights on a simplex lattice plus the prior.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::costs::{CostSpec, DerivativeCost};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lp::{self, LpOutcome};
use crate::model::{Belief, Menu, Prior, Scr};

pub const DEFAULT_RESOLUTION_2: usize = 400;
pub const DEFAULT_RESOLUTION_3: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOracleResult {
    /// Lattice beliefs with positive weight.
    pub beliefs: Vec<Belief>,
    pub weights: Vec<f64>,
    pub value: f64,
    /// Each support belief's best action takes its whole mass.
    pub scr: Scr,
    pub resolution: usize,
}

/// Every point of the simplex lattice with `resolution` points per edge.
pub(crate) fn lattice(n_states: usize, resolution: usize) -> Vec<Vec<f64>> {
    let steps = resolution.saturating_sub(1).max(1);
    let mut out = Vec::new();
    let mut counts = vec![0usize; n_states];
    fn rec(k: usize, left: usize, steps: usize, counts: &mut [usize], out: &mut Vec<Vec<f64>>) {
        if k + 1 == counts.len() {
            counts[k] = left;
            out.push(counts.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=left {
            counts[k] = c;
            rec(k + 1, left - c, steps, counts, out);
        }
    }
    if n_states > 0 {
        rec(0, steps, steps, &mut counts, &mut out);
    }
    out
}

/// Best action at `mu` (lowest index on ties) and its expected utility.
pub(crate) fn best_action(utilities: &[Vec<f64>], mu: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (a, row) in utilities.iter().enumerate() {
        let v: f64 = row.iter().zip(mu).map(|(u, m)| u * m).sum();
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

/// Runs the oracle; `resolution = None` uses the default for `|Ω|`.
pub fn grid_oracle(
    menu: &Menu,
    prior: &Prior,
    spec: &CostSpec,
    resolution: Option<usize>,
) -> Result<GridOracleResult> {
    prior.ensure_states("menu states", menu.n_states())?;
    if spec.prior() != prior {
        return Err(Error::PriorMismatch("cost and menu use different priors"));
    }
    let n = prior.len();
    let resolution = match (n, resolution) {
        (_, Some(r)) => r,
        (2, None) => DEFAULT_RESOLUTION_2,
        (_, None) => DEFAULT_RESOLUTION_3,
    };
    if n > 3 {
        return Err(Error::Unsupported(format!("grid oracle needs at most 3 states, got {n}")));
    }
    if resolution < 2 {
        return Err(crate::model::invalid("grid_resolution", "need at least 2 points per edge"));
    }
    let (dc, constant): (DerivativeCost, f64) = spec.affine_form().ok_or_else(|| {
        Error::Unsupported("grid oracle needs a cost that is affine in the policy".into())
    })?;
    let mut points = Vec::new();
    let mut net = Vec::new();
    // The prior joins the lattice so that the uninformative policy is
    // always feasible.
    let candidates = lattice(n, resolution).into_iter().chain(core::iter::once(prior.weights().to_vec()));
    for mu in candidates {
        let c = dc.value(&mu);
        if !c.is_finite() {
            continue;
        }
        let (_, v) = best_action(menu.utilities(), &mu);
        net.push(v - c);
        points.push(mu);
    }
    let mut a = Mat::zeros(n, points.len());
    for (j, mu) in points.iter().enumerate() {
        for ω in 0..n {
            a.set(ω, j, mu[ω]);
        }
    }
    let cost: Vec<f64> = net.iter().map(|v| -v).collect();
    let (x, objective) = match lp::solve(&a, prior.weights(), &cost, 1e-9) {
        LpOutcome::Optimal { x, objective } => (x, objective),
        other => {
            return Err(Error::Precondition(format!("grid program failed: {other:?}")));
        }
    };
    let mut beliefs = Vec::new();
    let mut weights = Vec::new();
    let mut probs = vec![vec![0.0; n]; menu.n_actions()];
    for (j, &w) in x.iter().enumerate() {
        if w <= 1e-14 {
            continue;
        }
        let mu = &points[j];
        let (best, _) = best_action(menu.utilities(), mu);
        for ω in 0..n {
            probs[best][ω] += w * mu[ω] / prior.weights()[ω];
        }
        beliefs.push(Belief::from_raw(mu.clone()));
        weights.push(w);
    }
    // Rebalance rounding in the column sums.
    for ω in 0..n {
        let total: f64 = probs.iter().map(|r| r[ω]).sum();
        probs.iter_mut().for_each(|r| r[ω] /= total);
    }
    Ok(GridOracleResult {
        beliefs,
        weights,
        value: -objective - constant,
        scr: Scr::clamped(probs),
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sizes() {
        assert_eq!(lattice(2, 5).len(), 5);
        assert_eq!(lattice(3, 4).len(), 10);
        for p in lattice(3, 7) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
