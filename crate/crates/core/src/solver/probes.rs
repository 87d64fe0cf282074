//! Seeded statistical probes of the value function and of generic uniqueness.

use alloc::vec::Vec;

use rand::Rng;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::model::{Menu, Prior};
use crate::sampling;

use super::{solve, Init, SolveOptions};

/// Slack in the convexity inequality.
pub const CONVEXITY_SLACK: f64 = 1e-8;
/// Largest SCR spread across initializations counted as agreement.
pub const SPREAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `V(βu+(1−β)u′) − βV(u) − (1−β)V(u′)` seen.
    pub max_excess: f64,
    pub seed: u64,
}

/// Checks `V(βu + (1−β)u′) ≤ βV(u) + (1−β)V(u′)` at random `β`.
pub fn value_convexity_probe(
    menu: &Menu,
    other: &Menu,
    prior: &Prior,
    spec: &CostSpec,
    samples: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<ConvexityReport> {
    if menu.n_actions() != other.n_actions() || menu.n_states() != other.n_states() {
        return Err(Error::DimensionMismatch {
            what: "menu pair",
            expected: menu.n_actions() * menu.n_states(),
            got: other.n_actions() * other.n_states(),
        });
    }
    let v0 = solve(menu, prior, spec, opts)?.value;
    let v1 = solve(other, prior, spec, opts)?.value;
    let mut rng = sampling::rng(seed);
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let beta: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
        let mixed: Vec<Vec<f64>> = menu
            .utilities()
            .iter()
            .zip(other.utilities())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| beta * x + (1.0 - beta) * y).collect())
            .collect();
        let v = solve(&menu.with_utilities(mixed)?, prior, spec, opts)?.value;
        let excess = v - beta * v0 - (1.0 - beta) * v1;
        max_excess = max_excess.max(excess);
        if excess > CONVEXITY_SLACK {
            violations += 1;
        }
    }
    Ok(ConvexityReport {
        samples,
        violations,
        max_excess,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessProbeReport {
    pub instances: usize,
    pub initializations: usize,
    /// Per instance, the largest sup-distance between SCRs from different
    /// starts.
    pub spreads: Vec<f64>,
    pub max_spread: f64,
    /// Instances whose spread exceeds [`SPREAD_TOL`].
    pub failures: usize,
    pub seed: u64,
}

/// Solves `instances` random menus (utilities uniform in `[0, 1)`) from
/// `initializations` random starts each and measures disagreement.
pub fn uniqueness_probe(
    prior: &Prior,
    spec: &CostSpec,
    n_actions: usize,
    instances: usize,
    initializations: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<UniquenessProbeReport> {
    let mut rng = sampling::rng(seed);
    let mut spreads = Vec::with_capacity(instances);
    for _ in 0..instances {
        let menu = sampling::random_menu(&mut rng, n_actions, prior.len(), 0.0, 1.0);
        let mut scrs = Vec::with_capacity(initializations);
        for _ in 0..initializations {
            let init = Init::Random { seed: rng.gen() };
            scrs.push(solve(&menu, prior, spec, &opts.with_init(init))?.scr);
        }
        let mut spread = 0.0f64;
        for i in 0..scrs.len() {
            for j in (i + 1)..scrs.len() {
                spread = spread.max(scrs[i].max_abs_diff(&scrs[j]));
            }
        }
        spreads.push(spread);
    }
    let max_spread = spreads.iter().copied().fold(0.0, f64::max);
    let failures = spreads.iter().filter(|&&s| s > SPREAD_TOL).count();
    Ok(UniquenessProbeReport {
        instances,
        initializations,
        spreads,
        max_spread,
        failures,
        seed,
    })
}
