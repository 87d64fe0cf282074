//! Seeded random instances for probes and property checks.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

use crate::math::ln;
use crate::model::{Menu, Scr};

/// The generator used by every seeded routine in the crate.
pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            -ln(1.0 - u)
        })
        .collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in &mut v {
            *x /= total;
        }
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / n as f64);
    }
    v
}

/// Simplex draw mixed with the uniform point so every coordinate is at
/// least `floor / n`.
pub fn random_interior_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    random_simplex(rng, n)
        .into_iter()
        .map(|x| (1.0 - floor) * x + floor / n as f64)
        .collect()
}

/// SCR whose columns are independent flat-Dirichlet draws.
pub fn random_scr<R: Rng + ?Sized>(rng: &mut R, n_actions: usize, n_states: usize) -> Scr {
    let columns: Vec<Vec<f64>> = (0..n_states).map(|_| random_simplex(rng, n_actions)).collect();
    let probs = (0..n_actions)
        .map(|a| columns.iter().map(|c| c[a]).collect())
        .collect();
    Scr::clamped(probs)
}

/// Menu with utilities drawn uniformly from `[lo, hi)`.
pub fn random_menu<R: Rng + ?Sized>(
    rng: &mut R,
    n_actions: usize,
    n_states: usize,
    lo: f64,
    hi: f64,
) -> Menu {
    let utilities = (0..n_actions)
        .map(|_| (0..n_states).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect())
        .collect();
    Menu::from_utilities(utilities).expect("finite utilities")
}
