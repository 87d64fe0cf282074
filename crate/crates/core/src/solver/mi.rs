//! Blahut–Arimoto iteration for mutual-information costs.
//!
//! Given marginals `p`, the optimal SCR is the logit rule
//! `s_a(ω) = p_a e^{u_a(ω)/λ} / Z(ω)`; the next marginals are `E[s_a]`. The
//! objective is nondecreasing along the iterates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{solve, Mat};
use crate::math::{exp, ln, log_sum_exp, xlogxy};
use crate::sampling;

use super::{Init, SolveOptions};

/// Marginals below this value count as collapsing.
pub(crate) const DROP_MARGINAL: f64 = 1e-12;
/// Consecutive collapsing iterations before an action is dropped.
pub(crate) const DROP_PATIENCE: usize = 100;
/// Slack in the no-profitable-entry test for unused actions.
pub(crate) const ENTRY_TOL: f64 = 1e-9;
/// Largest marginal given to an action that fails the entry test.
const READMIT_MARGINAL: f64 = 1e-3;
/// Every [`PRUNE_EVERY`] iterations, actions whose marginal shrank over the
/// window are tentatively removed; the entry test brings back (and protects)
/// any that matter. Near-indifferent entry, or a large scale, makes the decay
/// sublinear or extremely slow, so waiting for [`DROP_MARGINAL`] alone can
/// take millions of iterations.
const PRUNE_EVERY: usize = 100;
/// Newton polishing starts once every active ratio `E[s_a]/p_a` is this close
/// to one; after a failed attempt it waits [`NEWTON_BACKOFF`] iterations.
const NEWTON_START: f64 = 1e-3;
const NEWTON_BACKOFF: usize = 500;
const NEWTON_STEPS: usize = 30;

pub(crate) struct BaOutcome {
    pub probs: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
    pub trace: Vec<f64>,
}

/// `I(s) = Σ_ω μ0 Σ_a s_a ln(s_a / p_a)`.
pub(crate) fn mutual_information(m0: &[f64], probs: &[Vec<f64>]) -> f64 {
    probs
        .iter()
        .map(|row| {
            let p: f64 = row.iter().zip(m0).map(|(s, w)| s * w).sum();
            if p <= 0.0 {
                return 0.0;
            }
            row.iter().zip(m0).map(|(&s, &w)| w * xlogxy(s, p)).sum::<f64>()
        })
        .sum()
}

fn objective(u: &[Vec<f64>], m0: &[f64], scale: f64, probs: &[Vec<f64>]) -> f64 {
    let eu: f64 = u
        .iter()
        .zip(probs)
        .map(|(ur, sr)| ur.iter().zip(sr).zip(m0).map(|((x, s), w)| x * s * w).sum::<f64>())
        .sum();
    eu - scale * mutual_information(m0, probs)
}

fn initial_marginals(n: usize, init: Init) -> Vec<f64> {
    match init {
        Init::Uniform => vec![1.0 / n as f64; n],
        Init::Random { seed } => {
            let mut rng = sampling::rng(seed);
            sampling::random_interior_simplex(&mut rng, n, 0.05)
        }
    }
}

fn normalize(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
}

/// Per-state `ln Z(ω)` over actions with positive marginal.
fn log_partition(u: &[Vec<f64>], p: &[f64], scale: f64, n_states: usize) -> Vec<f64> {
    (0..n_states)
        .map(|ω| {
            log_sum_exp(
                p.iter()
                    .zip(u)
                    .filter(|(&pa, _)| pa > 0.0)
                    .map(move |(&pa, ua)| ln(pa) + ua[ω] / scale),
            )
        })
        .collect()
}

/// Logit SCR generated by marginals `p`, written into `probs`; returns
/// `ln Z(ω)` and the next marginals.
fn logit(u: &[Vec<f64>], m0: &[f64], scale: f64, p: &[f64], probs: &mut [Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let log_z = log_partition(u, p, scale, m0.len());
    for (a, row) in probs.iter_mut().enumerate() {
        for (ω, x) in row.iter_mut().enumerate() {
            *x = if p[a] > 0.0 {
                exp(ln(p[a]) + u[a][ω] / scale - log_z[ω])
            } else {
                0.0
            };
        }
    }
    let next = probs.iter().map(|row| row.iter().zip(m0).map(|(s, w)| s * w).sum()).collect();
    (log_z, next)
}

fn value_at(u: &[Vec<f64>], m0: &[f64], scale: f64, p: &[f64]) -> f64 {
    let mut probs = vec![vec![0.0; m0.len()]; p.len()];
    logit(u, m0, scale, p, &mut probs);
    objective(u, m0, scale, &probs)
}

/// Newton's method on the marginal fixed point `E[e^{u_a/λ}/Z] = 1` over the
/// active actions. Returns improved marginals, or `None` when the step fails
/// (singular Jacobian, lost positivity, or no gain in value).
fn newton(u: &[Vec<f64>], m0: &[f64], scale: f64, p: &[f64], value: f64, tol: f64) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..p.len()).filter(|&a| p[a] > 0.0).collect();
    let k = active.len();
    let n_states = m0.len();
    // e[i][ω] = exp(u_a(ω)/λ − max_b u_b(ω)/λ) for a = active[i].
    let e: Vec<Vec<f64>> = {
        let top: Vec<f64> = (0..n_states)
            .map(|ω| active.iter().map(|&a| u[a][ω] / scale).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        active.iter().map(|&a| (0..n_states).map(|ω| exp(u[a][ω] / scale - top[ω])).collect()).collect()
    };
    let eval = |q: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = (0..n_states).map(|ω| (0..k).map(|i| q[i] * e[i][ω]).sum()).collect();
        let f = (0..k).map(|i| (0..n_states).map(|ω| m0[ω] * e[i][ω] / z[ω]).sum::<f64>() - 1.0).collect();
        (f, z)
    };
    let norm = |f: &[f64]| f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut q: Vec<f64> = active.iter().map(|&a| p[a]).collect();
    let (mut f, mut z) = eval(&q);
    for _ in 0..NEWTON_STEPS {
        if norm(&f) < 1e-3 * tol {
            break;
        }
        let mut jac = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                jac.set(i, j, -(0..n_states).map(|ω| m0[ω] * e[i][ω] * e[j][ω] / (z[ω] * z[ω])).sum::<f64>());
            }
        }
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let step = solve(&jac, &rhs)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = q.iter().zip(&step).map(|(x, d)| x + t * d).collect();
            if trial.iter().all(|&x| x > 0.0) {
                let (ft, zt) = eval(&trial);
                if norm(&ft) < norm(&f) {
                    q = trial;
                    f = ft;
                    z = zt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-8 {
                return None;
            }
        }
    }
    let total: f64 = q.iter().sum();
    let mut out = vec![0.0; p.len()];
    for (i, &a) in active.iter().enumerate() {
        out[a] = q[i] / total;
    }
    (value_at(u, m0, scale, &out) >= value).then_some(out)
}

/// Runs the fixed point. `start` overrides `opts.init` with explicit
/// marginals.
pub(crate) fn blahut_arimoto(
    u: &[Vec<f64>],
    m0: &[f64],
    scale: f64,
    tol: f64,
    opts: &SolveOptions,
    start: Option<Vec<f64>>,
) -> Result<BaOutcome> {
    let n_actions = u.len();
    let n_states = m0.len();
    let mut p = start.unwrap_or_else(|| initial_marginals(n_actions, opts.init));
    normalize(&mut p);
    let mut iterations = 0usize;
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;
    let mut probs = vec![vec![0.0; n_states]; n_actions];
    // Actions readmitted after a tentative prune are only dropped by the
    // strict collapse rule.
    let mut protected = vec![false; n_actions];
    let mut newton_after = 0usize;
    'restart: loop {
        let mut collapsing = vec![0usize; n_actions];
        let mut snapshot = p.clone();
        loop {
            if iterations >= opts.max_iter {
                return Err(Error::NonConvergence { iterations, residual });
            }
            iterations += 1;
            let (log_z, next) = logit(u, m0, scale, &p, &mut probs);
            let value = objective(u, m0, scale, &probs);
            if opts.record_trace {
                trace.push(value);
            }

            let change = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let active_residual = next
                .iter()
                .zip(&p)
                .filter(|(_, &pa)| pa > 0.0)
                .map(|(&n, &pa)| (n / pa - 1.0).abs())
                .fold(0.0, f64::max);

            // Drop persistently collapsing actions.
            let mut collapsed = Vec::new();
            for a in 0..n_actions {
                if p[a] > 0.0 && next[a] < DROP_MARGINAL {
                    collapsing[a] += 1;
                    if collapsing[a] >= DROP_PATIENCE {
                        collapsed.push(a);
                    }
                } else {
                    collapsing[a] = 0;
                }
            }
            let converged = change < tol && active_residual < tol;
            if converged {
                // Never stop on a vanishing but nominally active action.
                collapsed.extend((0..n_actions).filter(|&a| p[a] > 0.0 && next[a] < DROP_MARGINAL));
            }
            if !collapsed.is_empty() && next.iter().filter(|&&x| x >= DROP_MARGINAL).count() >= 1 {
                p = next;
                for &a in &collapsed {
                    p[a] = 0.0;
                }
                normalize(&mut p);
                continue 'restart;
            }
            if iterations % PRUNE_EVERY == 0 {
                let mut candidate = next.clone();
                let mut pruned = false;
                for a in 0..n_actions {
                    if !protected[a] && p[a] > 0.0 && next[a] < snapshot[a] {
                        candidate[a] = 0.0;
                        pruned = true;
                    }
                }
                snapshot.clone_from(&next);
                if pruned {
                    normalize(&mut candidate);
                    // Keep the objective monotone: a removal that loses
                    // value waits for the next window.
                    if value_at(u, m0, scale, &candidate) >= value {
                        p = candidate;
                        continue 'restart;
                    }
                }
            }

            if converged {
                // Entry test for unused actions at the marginals that
                // generated `probs`.
                let mut worst = 0.0f64;
                let mut readmit = None;
                for b in 0..n_actions {
                    if p[b] > 0.0 {
                        continue;
                    }
                    let entry: f64 = (0..n_states).map(|ω| m0[ω] * exp(u[b][ω] / scale - log_z[ω])).sum();
                    let excess = entry - 1.0 - ENTRY_TOL;
                    if excess > worst {
                        worst = excess;
                        readmit = Some(b);
                    }
                }
                if let Some(b) = readmit {
                    protected[b] = true;
                    // Entry is profitable to first order, so a small enough
                    // mass raises the objective.
                    let mut mass = READMIT_MARGINAL;
                    loop {
                        let mut candidate = next.clone();
                        candidate[b] = mass;
                        normalize(&mut candidate);
                        if value_at(u, m0, scale, &candidate) >= value || mass < 1e-14 {
                            p = candidate;
                            break;
                        }
                        mass *= 0.5;
                    }
                    continue 'restart;
                }
                residual = active_residual.max(worst);
                break 'restart;
            }
            residual = active_residual.max(change);
            if active_residual < NEWTON_START && iterations >= newton_after {
                match newton(u, m0, scale, &p, value, tol) {
                    Some(polished) => p = polished,
                    None => {
                        newton_after = iterations + NEWTON_BACKOFF;
                        p = next;
                    }
                }
            } else {
                p = next;
            }
        }
    }
    Ok(BaOutcome {
        probs,
        iterations,
        residual,
        trace,
    })
}
