//! Revealed information policies, the indirect cost `κ(s) = C(p^s)`, and the
//! Blackwell order on simple policies.

use alloc::vec;
use alloc::vec::Vec;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lp::{self, LpOutcome};
use crate::model::{Belief, Prior, Scr, SimpleInfoPolicy};

/// Coordinatewise distance under which two beliefs are merged.
pub const MERGE_TOL: f64 = 1e-12;
/// Phase-one infeasibility accepted by the mean-preserving-spread program.
pub const BLACKWELL_FEAS_TOL: f64 = 1e-9;

/// Marginals `p_a` and posteriors `μ_a` of the actions an SCR uses.
#[derive(Debug, Clone, PartialEq)]
pub struct RevealedPolicy {
    prior: Prior,
    /// Indices (into the SCR's action order) with positive marginal.
    actions: Vec<usize>,
    marginals: Vec<f64>,
    posteriors: Vec<Belief>,
    /// Actions never taken; their posterior is undefined.
    excluded: Vec<usize>,
}

impl RevealedPolicy {
    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn posteriors(&self) -> &[Belief] {
        &self.posteriors
    }

    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Marginal and posterior of action `a`, if it is taken.
    pub fn get(&self, a: usize) -> Option<(f64, &Belief)> {
        let k = self.actions.iter().position(|&x| x == a)?;
        Some((self.marginals[k], &self.posteriors[k]))
    }

    /// The policy `p^s` as a distribution over beliefs.
    pub fn to_policy(&self) -> SimpleInfoPolicy {
        SimpleInfoPolicy::new_unchecked(self.prior.clone(), self.posteriors.clone(), self.marginals.clone())
    }
}

/// Bayes' rule: `p_a = Σ μ0 s_a`, `μ_a = μ0 s_a / p_a`.
///
/// Every action with a strictly positive marginal is kept, so the output is
/// exactly Bayes plausible; actions with `p_a = 0` are listed as excluded.
pub fn reveal(scr: &Scr, prior: &Prior) -> Result<RevealedPolicy> {
    prior.ensure_states("SCR states", scr.n_states())?;
    let m0 = prior.weights();
    let mut actions = Vec::new();
    let mut marginals = Vec::new();
    let mut posteriors = Vec::new();
    let mut excluded = Vec::new();
    for (a, p) in scr.marginals(prior).into_iter().enumerate() {
        if p > 0.0 {
            let row = &scr.probs()[a];
            let mu = row.iter().zip(m0).map(|(&s, &w)| w * s / p).collect();
            actions.push(a);
            marginals.push(p);
            posteriors.push(Belief::from_raw(mu));
        } else {
            excluded.push(a);
        }
    }
    Ok(RevealedPolicy {
        prior: prior.clone(),
        actions,
        marginals,
        posteriors,
        excluded,
    })
}

/// Indirect cost `κ(s) = C(p^s)`.
pub fn kappa(spec: &CostSpec, scr: &Scr, prior: &Prior) -> Result<f64> {
    if spec.prior() != prior {
        return Err(Error::PriorMismatch("cost and SCR use different priors"));
    }
    spec.eval(&reveal(scr, prior)?.to_policy())
}

/// Outcome of the mean-preserving-spread test `p ⪰ q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackwellVerdict {
    pub more_informative: bool,
    /// Feasible joint weighting `W[i][j]` over `supp q × supp p` (in the order
    /// of the positive-weight beliefs) when `p ⪰ q`.
    pub witness: Option<Vec<Vec<f64>>>,
    /// Farkas multipliers proving infeasibility otherwise.
    pub certificate: Option<Vec<f64>>,
    /// Phase-one infeasibility of the program.
    pub residual: f64,
}

/// Decides whether `p` is a mean-preserving spread of `q`.
pub fn blackwell_geq(p: &SimpleInfoPolicy, q: &SimpleInfoPolicy) -> Result<BlackwellVerdict> {
    if p.prior() != q.prior() {
        return Err(Error::PriorMismatch("policies use different priors"));
    }
    let ps: Vec<(&Belief, f64)> = p.support().collect();
    let qs: Vec<(&Belief, f64)> = q.support().collect();
    let n = p.prior().len();
    let (ni, nj) = (qs.len(), ps.len());
    // Rows: q-row sums, p-column sums, mean constraints per (i, ω).
    let rows = ni + nj + ni * n;
    let mut a = Mat::zeros(rows, ni * nj);
    let mut b = vec![0.0; rows];
    for i in 0..ni {
        for j in 0..nj {
            let col = i * nj + j;
            a.set(i, col, 1.0);
            a.set(ni + j, col, 1.0);
            for ω in 0..n {
                a.set(ni + nj + i * n + ω, col, ps[j].0.weights()[ω]);
            }
        }
        b[i] = qs[i].1;
        for ω in 0..n {
            b[ni + nj + i * n + ω] = qs[i].1 * qs[i].0.weights()[ω];
        }
    }
    for j in 0..nj {
        b[ni + j] = ps[j].1;
    }
    let c = vec![0.0; ni * nj];
    Ok(match lp::solve(&a, &b, &c, BLACKWELL_FEAS_TOL) {
        LpOutcome::Optimal { x, .. } => BlackwellVerdict {
            more_informative: true,
            witness: Some(x.chunks(nj.max(1)).map(<[f64]>::to_vec).collect()),
            certificate: None,
            residual: 0.0,
        },
        LpOutcome::Infeasible { residual, dual } => BlackwellVerdict {
            more_informative: false,
            witness: None,
            certificate: Some(dual),
            residual,
        },
        // A zero objective cannot be unbounded.
        LpOutcome::Unbounded => unreachable!("feasibility program with zero objective"),
    })
}

/// `β·p + (1−β)·q` with duplicate beliefs merged.
pub fn mix_policies(p: &SimpleInfoPolicy, q: &SimpleInfoPolicy, beta: f64) -> Result<SimpleInfoPolicy> {
    if p.prior() != q.prior() {
        return Err(Error::PriorMismatch("policies use different priors"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(crate::model::invalid("beta", alloc::format!("{beta} is outside [0, 1]")));
    }
    let pairs = p
        .support()
        .map(|(b, w)| (b, beta * w))
        .chain(q.support().map(|(b, w)| (b, (1.0 - beta) * w)));
    let (beliefs, weights) = merge(pairs);
    Ok(SimpleInfoPolicy::new_unchecked(p.prior().clone(), beliefs, weights))
}

fn merge<'a>(pairs: impl Iterator<Item = (&'a Belief, f64)>) -> (Vec<Belief>, Vec<f64>) {
    let mut beliefs: Vec<Belief> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (b, w) in pairs {
        if w <= 0.0 {
            continue;
        }
        match beliefs
            .iter()
            .position(|x| crate::math::max_abs_diff(x.weights(), b.weights()) <= MERGE_TOL)
        {
            Some(k) => weights[k] += w,
            None => {
                beliefs.push(b.clone());
                weights.push(w);
            }
        }
    }
    (beliefs, weights)
}

/// Whether two policies put the same weights on the same beliefs, up to
/// `tol` in every coordinate and weight.
pub fn policies_equal(p: &SimpleInfoPolicy, q: &SimpleInfoPolicy, tol: f64) -> bool {
    let (pb, pw) = merge(p.support());
    let (qb, qw) = merge(q.support());
    let covered = |xb: &[Belief], xw: &[f64], yb: &[Belief], yw: &[f64]| {
        xb.iter().zip(xw).all(|(b, &w)| {
            let mass: f64 = yb
                .iter()
                .zip(yw)
                .filter(|(c, _)| crate::math::max_abs_diff(b.weights(), c.weights()) <= tol)
                .map(|(_, &v)| v)
                .sum();
            (mass - w).abs() <= tol
        })
    };
    covered(&pb, &pw, &qb, &qw) && covered(&qb, &qw, &pb, &pw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reveal_binary_example() {
        let prior = Prior::uniform(2).unwrap();
        let scr = Scr::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let r = reveal(&scr, &prior).unwrap();
        assert_eq!(r.marginals(), &[0.5, 0.5]);
        assert_eq!(r.posteriors()[1].weights(), &[0.25, 0.75]);
        assert_eq!(r.posteriors()[0].weights(), &[0.75, 0.25]);
    }

    #[test]
    fn unused_actions_are_excluded() {
        let prior = Prior::uniform(2).unwrap();
        let scr = Scr::new(vec![vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let r = reveal(&scr, &prior).unwrap();
        assert_eq!(r.actions(), &[0]);
        assert_eq!(r.excluded(), &[1]);
    }

    #[test]
    fn blackwell_extremes() {
        let prior = Prior::uniform(2).unwrap();
        let full = SimpleInfoPolicy::fully_revealing(&prior);
        let none = SimpleInfoPolicy::uninformative(&prior);
        assert!(blackwell_geq(&full, &none).unwrap().more_informative);
        let rev = blackwell_geq(&none, &full).unwrap();
        assert!(!rev.more_informative);
        assert!(rev.certificate.is_some());
        let same = blackwell_geq(&full, &full).unwrap();
        assert!(same.more_informative);
    }

    #[test]
    fn mixing_merges_duplicates() {
        let prior = Prior::uniform(3).unwrap();
        let none = SimpleInfoPolicy::uninformative(&prior);
        let m = mix_policies(&none, &none, 0.3).unwrap();
        assert_eq!(m.beliefs().len(), 1);
        assert!((m.weights()[0] - 1.0).abs() < 1e-15);
        let full = SimpleInfoPolicy::fully_revealing(&prior);
        assert!(policies_equal(&mix_policies(&full, &none, 1.0).unwrap(), &full, 1e-12));
        assert!(policies_equal(&mix_policies(&full, &none, 0.0).unwrap(), &none, 1e-12));
    }
}
