//! Inverse problems: optimality certificates, utility recovery, uniqueness
//! and equivalent optima.
//!
//! An SCR `s` is optimal for `u` under an iteratively differentiable cost iff
//! there are multipliers with `u_a = λ − γ_a + ∇c_{μ_a}`, `γ_a ≥ 0` and
//! `γ_a s_a = 0`. We take `λ(ω) = max_a (u_a − ∇c_{μ_a})(ω)` over used
//! actions, so `γ ≥ 0` holds there by construction and complementary
//! slackness is the binding test. An unused action `b` passes when no
//! posterior makes it worth adding: `max_μ [(u_b − λ)·μ − c(μ)] ≤ 0`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::costs::{CostSpec, DerivativeCost, NonDifferentiability};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::math::{dot, exp};
use crate::model::{Menu, Prior, Scr};
use crate::revealed::{self, reveal};
use crate::solver::oracle_lattice;

/// Default certificate tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Why costs with unbounded slope at the boundary reject such SCRs.
pub const INADA_MESSAGE: &str = "under a cost with infinite slope toward no information \
(d_p^+ C(δ_{μ0}) = −∞), every optimal SCR has s_a strictly positive μ0-almost surely for each \
chosen action a";

/// Lattice resolutions for the entry test of custom divergences.
const ENTRY_GRID_2: usize = 2001;
const ENTRY_GRID_3: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Optimal,
    NotOptimal,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::NotOptimal => "not-optimal",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// First-order optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FocCertificate {
    /// `λ(ω)`; empty when inconclusive before any computation.
    pub lambda: Vec<f64>,
    /// `γ_a(ω)`, action × state.
    pub gamma: Vec<Vec<f64>>,
    /// Best net gain from adding each unused action (`None` for used
    /// actions, or when it cannot be computed).
    pub entry: Vec<Option<f64>>,
    /// `max(max γ·s, max(0, entry gains))`.
    pub residual: f64,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

impl FocCertificate {
    fn inconclusive(reason: impl Into<String>) -> Self {
        Self {
            lambda: Vec::new(),
            gamma: Vec::new(),
            entry: Vec::new(),
            residual: f64::NAN,
            verdict: Verdict::Inconclusive,
            reason: Some(reason.into()),
        }
    }
}

pub(crate) struct FirstOrder {
    pub lambda: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub entry: Vec<Option<f64>>,
    pub residual: f64,
    /// Set when some unused action's entry test could not be run.
    pub unresolved: Option<String>,
}

/// Best response of a divergence without a closed form, by lattice search.
fn lattice_best_response(dc: &DerivativeCost, v: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = v.len();
    let resolution = match n {
        1 | 2 => ENTRY_GRID_2,
        3 => ENTRY_GRID_3,
        _ => return None,
    };
    oracle_lattice(n, resolution)
        .into_iter()
        .map(|mu| (dot(v, &mu) - dc.value(&mu), mu))
        .filter(|(x, _)| x.is_finite())
        .fold(None, |best: Option<(f64, Vec<f64>)>, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
}

/// Multipliers and residual of the first-order conditions at `probs`.
pub(crate) fn first_order(
    u: &[Vec<f64>],
    m0: &[f64],
    probs: &[Vec<f64>],
    dc: &DerivativeCost,
) -> Result<FirstOrder> {
    let n_states = m0.len();
    let mut net: Vec<Option<Vec<f64>>> = Vec::with_capacity(probs.len());
    for (a, row) in probs.iter().enumerate() {
        let p: f64 = dot(row, m0);
        if p > 0.0 {
            let mu: Vec<f64> = row.iter().zip(m0).map(|(s, w)| w * s / p).collect();
            let g = dc.gradient(&mu)?;
            net.push(Some(u[a].iter().zip(&g).map(|(x, y)| x - y).collect()));
        } else {
            net.push(None);
        }
    }
    let lambda: Vec<f64> = (0..n_states)
        .map(|ω| {
            net.iter()
                .filter_map(|g| g.as_ref().map(|g| g[ω]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut gamma = vec![vec![0.0; n_states]; probs.len()];
    let mut entry = vec![None; probs.len()];
    let mut complementarity = 0.0f64;
    let mut entry_gain = 0.0f64;
    let mut unresolved = None;
    for (a, g) in net.iter().enumerate() {
        match g {
            Some(g) => {
                for ω in 0..n_states {
                    gamma[a][ω] = lambda[ω] - g[ω];
                    complementarity = complementarity.max(gamma[a][ω] * probs[a][ω]);
                }
            }
            None => {
                let v: Vec<f64> = u[a].iter().zip(&lambda).map(|(x, l)| x - l).collect();
                match dc.best_response(&v).or_else(|| lattice_best_response(dc, &v)) {
                    Some((gain, mu)) => {
                        entry[a] = Some(gain);
                        entry_gain = entry_gain.max(gain);
                        match dc.gradient(&mu) {
                            Ok(gm) => {
                                for ω in 0..n_states {
                                    gamma[a][ω] = -v[ω] + gm[ω];
                                }
                            }
                            Err(_) => gamma[a].iter_mut().for_each(|x| *x = -gain),
                        }
                    }
                    None => {
                        unresolved = Some(format!(
                            "entry test for unused action {a} needs a closed-form best response or at most 3 states"
                        ));
                    }
                }
            }
        }
    }
    Ok(FirstOrder {
        lambda,
        gamma,
        entry,
        residual: complementarity.max(entry_gain),
        unresolved,
    })
}

fn check_shapes(scr: &Scr, menu: &Menu, prior: &Prior, spec: &CostSpec) -> Result<()> {
    prior.ensure_states("SCR states", scr.n_states())?;
    prior.ensure_states("menu states", menu.n_states())?;
    if scr.n_actions() != menu.n_actions() {
        return Err(Error::DimensionMismatch {
            what: "SCR actions",
            expected: menu.n_actions(),
            got: scr.n_actions(),
        });
    }
    if spec.prior() != prior {
        return Err(Error::PriorMismatch("cost and SCR use different priors"));
    }
    Ok(())
}

/// Certifies (or refutes) optimality of `scr` for `menu`.
pub fn certify(scr: &Scr, menu: &Menu, prior: &Prior, spec: &CostSpec, tol: f64) -> Result<FocCertificate> {
    check_shapes(scr, menu, prior, spec)?;
    let policy = reveal(scr, prior)?.to_policy();
    let diff = spec.is_iteratively_differentiable(&policy);
    if let Some(reason) = diff.reason {
        return Ok(FocCertificate::inconclusive(match reason {
            NonDifferentiability::BoundaryBelief => {
                format!("a revealed posterior lies on the boundary; {INADA_MESSAGE}")
            }
            other => format!("cost is not iteratively differentiable here ({})", other.as_str()),
        }));
    }
    let dc = spec.derivative(&policy)?;
    let fo = first_order(menu.utilities(), prior.weights(), scr.probs(), &dc)?;
    let verdict = if fo.residual > tol {
        Verdict::NotOptimal
    } else if fo.unresolved.is_some() {
        Verdict::Inconclusive
    } else {
        Verdict::Optimal
    };
    Ok(FocCertificate {
        lambda: fo.lambda,
        gamma: fo.gamma,
        entry: fo.entry,
        residual: fo.residual,
        verdict,
        reason: fo.unresolved,
    })
}

/// `u^s_a = ∇c_{μ_a^s}`: the utility recovered from an SCR, identified up to
/// adding any action-independent `λ(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredUtility {
    /// Action × state.
    pub base: Vec<Vec<f64>>,
    /// Revealed marginals `p_a`.
    pub marginals: Vec<f64>,
    pub note: &'static str,
}

pub const NUISANCE_NOTE: &str = "defined up to adding the same state-dependent vector λ(ω) to every action";

impl RecoveredUtility {
    /// Largest spread across actions of `v_a(ω) − u^s_a(ω)`, over states.
    /// Zero iff `v` differs from the recovered utility by a nuisance term.
    pub fn nuisance_spread(&self, v: &[Vec<f64>]) -> f64 {
        let n_states = self.base.first().map_or(0, Vec::len);
        (0..n_states)
            .map(|ω| {
                let diffs = v.iter().zip(&self.base).map(|(x, b)| x[ω] - b[ω]);
                let hi = diffs.clone().fold(f64::NEG_INFINITY, f64::max);
                let lo = diffs.fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn to_menu(&self, actions: &[String]) -> Result<Menu> {
        Menu::new(actions.to_vec(), self.base.clone())
    }
}

fn differentiable_derivative(spec: &CostSpec, scr: &Scr, prior: &Prior) -> Result<DerivativeCost> {
    if spec.prior() != prior {
        return Err(Error::PriorMismatch("cost and SCR use different priors"));
    }
    let policy = reveal(scr, prior)?.to_policy();
    let diff = spec.is_iteratively_differentiable(&policy);
    match diff.reason {
        Some(NonDifferentiability::BoundaryBelief) => Err(Error::NotRationalizable(format!(
            "a revealed posterior lies on the boundary; {INADA_MESSAGE}"
        ))),
        Some(other) => Err(Error::Precondition(format!(
            "cost is not iteratively differentiable at the revealed policy ({})",
            other.as_str()
        ))),
        None => spec.derivative(&policy),
    }
}

/// Recovers `u^s` from a conditionally-full-support SCR.
pub fn recover_utility(scr: &Scr, prior: &Prior, spec: &CostSpec) -> Result<RecoveredUtility> {
    prior.ensure_states("SCR states", scr.n_states())?;
    if !scr.has_conditionally_full_support() {
        return Err(Error::Precondition(
            "utility recovery needs every action used with positive probability in every state".into(),
        ));
    }
    let dc = differentiable_derivative(spec, scr, prior)?;
    let revealed = reveal(scr, prior)?;
    let base = revealed
        .posteriors()
        .iter()
        .map(|mu| dc.gradient(mu.weights()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveredUtility {
        base,
        marginals: revealed.marginals().to_vec(),
        note: NUISANCE_NOTE,
    })
}

/// Numerical rank test for linear independence of the SCR's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub unique_capable: bool,
    pub rank: usize,
    pub n_actions: usize,
    /// Singular values of `[s_a(ω)·μ0(ω)]`, decreasing.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

pub fn unique_check(scr: &Scr, prior: &Prior) -> Result<UniquenessReport> {
    prior.ensure_states("SCR states", scr.n_states())?;
    let rows: Vec<Vec<f64>> = scr
        .probs()
        .iter()
        .map(|row| row.iter().zip(prior.weights()).map(|(s, w)| s * w).collect())
        .collect();
    let sigma = linalg::singular_values(&Mat::from_rows(&rows));
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let threshold = prior.len() as f64 * sigma_max * 1e-12;
    let rank = sigma.iter().filter(|&&x| x > threshold).count();
    Ok(UniquenessReport {
        unique_capable: rank == scr.n_actions(),
        rank,
        n_actions: scr.n_actions(),
        singular_values: sigma,
        threshold,
    })
}

/// A second optimal SCR with the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentScr {
    pub scr: Scr,
    pub value: f64,
    /// `|value − value of the input SCR|`.
    pub value_gap: f64,
}

fn objective(scr: &Scr, menu: &Menu, prior: &Prior, spec: &CostSpec) -> Result<f64> {
    Ok(menu.expected_utility(prior, scr)? - revealed::kappa(spec, scr, prior)?)
}

/// Builds a distinct optimal SCR by reweighting affinely dependent revealed
/// posteriors, or `None` when the SCR's rows are linearly independent (or no
/// such reweighting exists).
pub fn find_equivalent(scr: &Scr, menu: &Menu, prior: &Prior, spec: &CostSpec) -> Result<Option<EquivalentScr>> {
    check_shapes(scr, menu, prior, spec)?;
    if spec.affine_form().is_none() {
        return Err(Error::Precondition("equivalent optima need a cost that is affine in the policy".into()));
    }
    let cert = certify(scr, menu, prior, spec, DEFAULT_TOL)?;
    if cert.verdict != Verdict::Optimal {
        return Err(Error::NotOptimal { residual: cert.residual });
    }
    if unique_check(scr, prior)?.unique_capable {
        return Ok(None);
    }
    let revealed = reveal(scr, prior)?;
    let k = revealed.len();
    if k < 2 {
        return Ok(None);
    }
    let n = prior.len();
    let mut m = Mat::zeros(n, k);
    for (j, mu) in revealed.posteriors().iter().enumerate() {
        for ω in 0..n {
            m.set(ω, j, mu.weights()[ω]);
        }
    }
    let (sigma, v) = linalg::svd_right(&m);
    let sigma_max = sigma[0];
    if sigma[k - 1] > 1e-9 * sigma_max {
        return Ok(None);
    }
    let mut z = v.column(k - 1);
    let zmax = z.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    z.iter_mut().for_each(|x| *x /= zmax);
    if let Some(last) = z.iter().rev().find(|x| x.abs() > 1e-12) {
        if *last > 0.0 {
            z.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let p = revealed.marginals();
    let eps_max = z
        .iter()
        .zip(p)
        .filter(|(zj, _)| **zj < 0.0)
        .map(|(zj, pj)| pj / -zj)
        .fold(f64::INFINITY, f64::min);
    let eps = 0.4 * eps_max;
    let mut probs = vec![vec![0.0; n]; scr.n_actions()];
    for (j, &a) in revealed.actions().iter().enumerate() {
        let ratio = (p[j] + eps * z[j]) / p[j];
        for ω in 0..n {
            probs[a][ω] = ratio * scr.probs()[a][ω];
        }
    }
    for ω in 0..n {
        let total: f64 = probs.iter().map(|r| r[ω]).sum();
        probs.iter_mut().for_each(|r| r[ω] /= total);
    }
    let alt = Scr::clamped(probs);
    let base_value = objective(scr, menu, prior, spec)?;
    let value = objective(&alt, menu, prior, spec)?;
    Ok(Some(EquivalentScr {
        scr: alt,
        value,
        value_gap: (value - base_value).abs(),
    }))
}

/// `min_μ c(μ)` for the derivative cost; zero for divergences from the
/// prior, numerical for custom ones.
fn min_cost(dc: &DerivativeCost) -> Result<f64> {
    let m0 = dc.prior().weights();
    let at_prior = dc.value(m0);
    if dc.factor() == 0.0 || dc.best_response(&vec![0.0; m0.len()]).is_some() {
        return Ok(dc.best_response(&vec![0.0; m0.len()]).map_or(at_prior, |(v, _)| -v));
    }
    // Entropic mirror descent from the prior.
    let mut mu = m0.to_vec();
    let mut val = at_prior;
    let mut eta = 1.0;
    for _ in 0..5000 {
        let g = dc.gradient(&mu)?;
        let mut improved = false;
        while eta > 1e-14 {
            let mut cand: Vec<f64> = mu.iter().zip(&g).map(|(m, gi)| m * exp(-eta * gi)).collect();
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|x| *x /= total);
            let cv = dc.value(&cand);
            if cv < val {
                mu = cand;
                val = cv;
                eta *= 1.5;
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(val.min(at_prior))
}

/// A utility that rationalizes `scr`: used actions get `∇c` at their
/// revealed posterior, unused actions the constant `min c`.
pub fn rationalize(scr: &Scr, prior: &Prior, spec: &CostSpec) -> Result<Menu> {
    prior.ensure_states("SCR states", scr.n_states())?;
    let dc = differentiable_derivative(spec, scr, prior)?;
    let revealed = reveal(scr, prior)?;
    let floor = min_cost(&dc)?;
    let mut utilities = vec![vec![floor; prior.len()]; scr.n_actions()];
    for (j, &a) in revealed.actions().iter().enumerate() {
        utilities[a] = dc.gradient(revealed.posteriors()[j].weights())?;
    }
    let labels = (0..scr.n_actions()).map(|a| a.to_string()).collect();
    Menu::new(labels, utilities)
}
