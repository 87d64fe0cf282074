//! Cross-menu predictions: recover `u^s` from behavior on the grand menu and
//! solve every submenu with it.
//!
//! Rationalizing utilities differ from `u^s` only by an action-independent
//! term `λ(ω)`, which shifts every submenu objective by the constant `E[λ]`
//! and so cannot move any argmax.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::inverse::{self, Verdict};
use crate::model::{Menu, Prior, Scr};
use crate::sampling;
use crate::solver::{solve, SolveOptions};

/// Largest grand menu for which all submenus are enumerated by default.
pub const MAX_DEFAULT_ACTIONS: usize = 6;

/// Forecast for one submenu.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmenuPrediction {
    /// Indices into the grand menu, increasing.
    pub indices: Vec<usize>,
    pub actions: Vec<String>,
    /// SCR over the submenu's actions.
    pub scr: Scr,
    /// Value under the recovered utility.
    pub value: f64,
    pub verdict: Verdict,
    pub residual: f64,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmenuForecast {
    pub predictions: Vec<SubmenuPrediction>,
}

impl SubmenuForecast {
    pub fn get(&self, indices: &[usize]) -> Option<&SubmenuPrediction> {
        self.predictions.iter().find(|p| p.indices == indices)
    }
}

/// Every nonempty subset of `0..n`, by size and then lexicographically.
pub fn all_submenus(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1u32 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn normalize_subsets(n: usize, submenus: Option<&[Vec<usize>]>) -> Result<Vec<Vec<usize>>> {
    match submenus {
        None if n <= MAX_DEFAULT_ACTIONS => Ok(all_submenus(n)),
        None => Err(Error::Precondition(format!(
            "{n} actions: list the submenus explicitly (all subsets are enumerated only up to {MAX_DEFAULT_ACTIONS})"
        ))),
        Some(list) => list
            .iter()
            .map(|b| {
                if b.is_empty() {
                    return Err(Error::EmptySubmenu);
                }
                let mut b = b.clone();
                b.sort_unstable();
                b.dedup();
                if let Some(&bad) = b.iter().find(|&&i| i >= n) {
                    return Err(Error::UnknownAction(format!("#{bad}")));
                }
                Ok(b)
            })
            .collect(),
    }
}

/// Solves each submenu with the given utility.
pub fn forecast_from_utility(
    utility: &Menu,
    prior: &Prior,
    spec: &CostSpec,
    submenus: Option<&[Vec<usize>]>,
    opts: &SolveOptions,
) -> Result<SubmenuForecast> {
    let subsets = normalize_subsets(utility.n_actions(), submenus)?;
    let mut predictions = Vec::with_capacity(subsets.len());
    for indices in subsets {
        let sub = utility.submenu_indices(&indices)?;
        let solved = solve(&sub, prior, spec, opts)?;
        let cert = inverse::certify(&solved.scr, &sub, prior, spec, inverse::DEFAULT_TOL)?;
        let unique = inverse::unique_check(&solved.scr, prior)?.unique_capable;
        predictions.push(SubmenuPrediction {
            actions: sub.actions().to_vec(),
            indices,
            scr: solved.scr,
            value: solved.value,
            verdict: cert.verdict,
            residual: cert.residual,
            unique,
        });
    }
    Ok(SubmenuForecast { predictions })
}

/// Checks the conditions under which behavior on the grand menu pins down
/// every submenu.
fn gate(scr: &Scr, prior: &Prior, spec: &CostSpec) -> Result<()> {
    if !scr.has_conditionally_full_support() {
        return Err(Error::Precondition(
            "the SCR must use every action with positive probability in every state".into(),
        ));
    }
    let policy = crate::revealed::reveal(scr, prior)?.to_policy();
    if let Some(reason) = spec.is_iteratively_differentiable(&policy).reason {
        return Err(Error::Precondition(format!(
            "the cost must be iteratively differentiable at the revealed policy ({})",
            reason.as_str()
        )));
    }
    if !spec.is_finite_on_simple_policies() {
        return Err(Error::Precondition("the cost must be finite at every simple information policy".into()));
    }
    Ok(())
}

/// Predicts behavior on submenus (default: all of them) from `scr` on the
/// grand menu.
pub fn predict_submenus(
    scr: &Scr,
    menu: &Menu,
    prior: &Prior,
    spec: &CostSpec,
    submenus: Option<&[Vec<usize>]>,
    opts: &SolveOptions,
) -> Result<SubmenuForecast> {
    if scr.n_actions() != menu.n_actions() {
        return Err(Error::DimensionMismatch {
            what: "SCR actions",
            expected: menu.n_actions(),
            got: scr.n_actions(),
        });
    }
    gate(scr, prior, spec)?;
    let recovered = inverse::recover_utility(scr, prior, spec)?;
    let utility = recovered.to_menu(menu.actions())?;
    forecast_from_utility(&utility, prior, spec, submenus, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Instances compared.
    pub trials: usize,
    /// Draws skipped because the grand-menu optimum left some action unused
    /// in some state.
    pub skipped: usize,
    /// Draws where some solve failed.
    pub failures: usize,
    /// Largest sup-distance between a predicted submenu SCR and the direct
    /// solve with the true utility.
    pub max_deviation: f64,
    /// `(trial, submenu)` pairs whose prediction was flagged non-unique.
    pub multiple_optima: Vec<(usize, Vec<usize>)>,
    pub seed: u64,
}

/// Draws random utilities in the range of `menu`'s utilities until `trials`
/// grand optima with conditionally full support have been compared (giving
/// up after `10·trials` draws).
pub fn forecast_consistency(
    menu: &Menu,
    prior: &Prior,
    spec: &CostSpec,
    trials: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<ConsistencyReport> {
    let flat = menu.utilities().iter().flatten();
    let lo = flat.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = flat.copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rng = sampling::rng(seed);
    let mut report = ConsistencyReport {
        trials: 0,
        skipped: 0,
        failures: 0,
        max_deviation: 0.0,
        multiple_optima: Vec::new(),
        seed,
    };
    let mut draws = 0;
    while report.trials < trials && draws < 10 * trials.max(1) {
        draws += 1;
        let utilities: Vec<Vec<f64>> = menu
            .utilities()
            .iter()
            .map(|row| row.iter().map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect())
            .collect();
        let truth = menu.with_utilities(utilities)?;
        let compared = (|| -> Result<Option<(f64, Vec<Vec<usize>>)>> {
            let grand = solve(&truth, prior, spec, opts)?;
            if !grand.scr.has_conditionally_full_support() {
                return Ok(None);
            }
            let forecast = predict_submenus(&grand.scr, &truth, prior, spec, None, opts)?;
            let mut deviation = 0.0f64;
            let mut flagged = Vec::new();
            for p in &forecast.predictions {
                let direct = solve(&truth.submenu_indices(&p.indices)?, prior, spec, opts)?;
                deviation = deviation.max(direct.scr.max_abs_diff(&p.scr));
                if !p.unique {
                    flagged.push(p.indices.clone());
                }
            }
            Ok(Some((deviation, flagged)))
        })();
        match compared {
            Ok(Some((deviation, flagged))) => {
                report.max_deviation = report.max_deviation.max(deviation);
                for b in flagged {
                    report.multiple_optima.push((report.trials, b));
                }
                report.trials += 1;
            }
            Ok(None) => report.skipped += 1,
            Err(_) => report.failures += 1,
        }
    }
    Ok(report)
}
