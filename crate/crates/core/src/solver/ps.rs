//! Posterior-separable solver.
//!
//! For a fixed derivative cost `c` the objective
//! `J(s) = Σ_ω μ0 Σ_a s_a u_a − Σ_a p_a c(μ_a)` is concave in `s` with
//! partial derivatives `μ0(ω)·(u_a − ∇c_{μ_a})(ω)`. We run exponentiated
//! gradient ascent (state by state on the action simplex) to get close, then
//! solve the first-order system on the active set by Newton's method.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::costs::{CostSpec, DerivativeCost, DivergenceSpec, PsiSpec};
use crate::error::{Error, Result};
use crate::inverse;
use crate::linalg::{self, Mat};
use crate::math::exp;
use crate::model::{Menu, Prior, Scr};
use crate::sampling;

use super::mi;
use super::{Init, SolveMethod, SolveOptions, SolveResult, MI_TOL, PS_TOL};

/// Entries below this value after the ascent phase start out inactive.
const FREE_THRESHOLD: f64 = 1e-9;
/// Exponentiated-gradient steps per ascent phase.
const ASCENT_STEPS: usize = 4000;
/// Active-set changes before the polish gives up.
const ACTIVE_SET_ROUNDS: usize = 60;
const NEWTON_STEPS: usize = 100;
/// First-order accuracy requested from the Newton polish.
const NEWTON_TOL: f64 = 1e-13;
/// Mass given to an unused action readmitted by the entry test.
const READMIT_MASS: f64 = 1e-3;
/// Relative tolerance of the derivative-weight fixed point.
const WEIGHT_TOL: f64 = 1e-12;

pub(crate) struct FixedOutcome {
    pub probs: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
    pub method: SolveMethod,
    pub trace: Vec<f64>,
}

/// Each state picks its best action (lowest index on ties).
fn argmax_scr(u: &[Vec<f64>], n_states: usize) -> Vec<Vec<f64>> {
    let mut probs = vec![vec![0.0; n_states]; u.len()];
    for ω in 0..n_states {
        let mut best = 0;
        for a in 1..u.len() {
            if u[a][ω] > u[best][ω] {
                best = a;
            }
        }
        probs[best][ω] = 1.0;
    }
    probs
}

/// Solves against a fixed derivative cost.
pub(crate) fn solve_fixed(
    u: &[Vec<f64>],
    prior: &Prior,
    dc: &DerivativeCost,
    opts: &SolveOptions,
) -> Result<FixedOutcome> {
    let m0 = prior.weights();
    if dc.factor() == 0.0 {
        return Ok(FixedOutcome {
            probs: argmax_scr(u, m0.len()),
            iterations: 0,
            residual: 0.0,
            method: SolveMethod::Argmax,
            trace: Vec::new(),
        });
    }
    if let DivergenceSpec::Kl = dc.divergence() {
        let tol = opts.tol.unwrap_or(MI_TOL);
        let out = mi::blahut_arimoto(u, m0, dc.factor(), tol, opts, None)?;
        return Ok(FixedOutcome {
            probs: out.probs,
            iterations: out.iterations,
            residual: out.residual,
            method: SolveMethod::BlahutArimoto,
            trace: out.trace,
        });
    }
    let tol = opts.tol.unwrap_or(PS_TOL);
    Generic { u, m0, dc }.run(tol, opts)
}

struct Generic<'a> {
    u: &'a [Vec<f64>],
    m0: &'a [f64],
    dc: &'a DerivativeCost,
}

type Net = Vec<Option<Vec<f64>>>;

impl Generic<'_> {
    fn n_actions(&self) -> usize {
        self.u.len()
    }

    fn n_states(&self) -> usize {
        self.m0.len()
    }

    fn marginal(&self, row: &[f64]) -> f64 {
        row.iter().zip(self.m0).map(|(s, w)| s * w).sum()
    }

    fn posterior(&self, row: &[f64], p: f64) -> Vec<f64> {
        row.iter().zip(self.m0).map(|(s, w)| w * s / p).collect()
    }

    fn trap(&self, a: usize, detail: impl core::fmt::Display) -> Error {
        Error::BoundaryTrap(format!(
            "action {a}: {detail}; the divergence has no bounded gradient at this posterior"
        ))
    }

    /// `u_a − ∇c_{μ_a}` for every action with positive marginal.
    fn row_net(&self, a: usize, row: &[f64]) -> Result<Option<Vec<f64>>> {
        let p = self.marginal(row);
        if p <= 0.0 {
            return Ok(None);
        }
        let g = match self.dc.gradient(&self.posterior(row, p)) {
            Ok(g) => g,
            Err(Error::BoundaryBelief { state }) => {
                return Err(self.trap(a, format!("posterior vanishes in state {state}")))
            }
            Err(e) => return Err(e),
        };
        if g.iter().any(|x| !x.is_finite()) {
            return Err(self.trap(a, "gradient is not finite"));
        }
        Ok(Some(self.u[a].iter().zip(&g).map(|(x, y)| x - y).collect()))
    }

    fn net(&self, s: &[Vec<f64>]) -> Result<Net> {
        s.iter().enumerate().map(|(a, row)| self.row_net(a, row)).collect()
    }

    fn objective(&self, s: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (a, row) in s.iter().enumerate() {
            let p = self.marginal(row);
            total += row.iter().zip(&self.u[a]).zip(self.m0).map(|((s, u), w)| s * u * w).sum::<f64>();
            if p > 0.0 {
                total -= p * self.dc.value(&self.posterior(row, p));
            }
        }
        total
    }

    fn initial(&self, init: Init) -> Vec<Vec<f64>> {
        match init {
            Init::Uniform => Scr::uniform(self.n_actions(), self.n_states()).into_probs(),
            Init::Random { seed } => {
                let mut rng = sampling::rng(seed);
                let uniform = Scr::uniform(self.n_actions(), self.n_states());
                sampling::random_scr(&mut rng, self.n_actions(), self.n_states())
                    .mix(&uniform, 0.9)
                    .expect("same shape")
                    .into_probs()
            }
        }
    }

    fn run(&self, tol: f64, opts: &SolveOptions) -> Result<FixedOutcome> {
        let mut s = self.initial(opts.init);
        let mut trace = Vec::new();
        let mut iterations = 0usize;
        let mut eta = 1.0 / self.dc.factor();
        let mut residual = f64::INFINITY;
        while iterations < opts.max_iter {
            let budget = ASCENT_STEPS.min(opts.max_iter - iterations);
            let taken = self.ascend(&mut s, &mut eta, budget, opts.record_trace.then_some(&mut trace))?;
            iterations += taken.max(1);
            let mut polished = s.clone();
            if let Some(steps) = self.polish(&mut polished, tol)? {
                iterations += steps;
                let foc = inverse::first_order(self.u, self.m0, &polished, self.dc)?;
                residual = foc.residual;
                if opts.record_trace {
                    trace.push(self.objective(&polished));
                }
                if residual <= tol {
                    return Ok(FixedOutcome {
                        probs: polished,
                        iterations,
                        residual,
                        method: SolveMethod::MirrorNewton,
                        trace,
                    });
                }
            }
            let foc = inverse::first_order(self.u, self.m0, &s, self.dc)?;
            residual = residual.min(foc.residual);
            if foc.residual <= tol {
                return Ok(FixedOutcome {
                    probs: s,
                    iterations,
                    residual: foc.residual,
                    method: SolveMethod::MirrorNewton,
                    trace,
                });
            }
        }
        Err(Error::NonConvergence { iterations, residual })
    }

    /// Exponentiated-gradient ascent with Armijo backtracking. Returns the
    /// number of steps taken.
    fn ascend(
        &self,
        s: &mut Vec<Vec<f64>>,
        eta: &mut f64,
        budget: usize,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<usize> {
        let n_states = self.n_states();
        let mut j = self.objective(s);
        let mut flat = 0;
        for step in 0..budget {
            let net = self.net(s)?;
            let mut accepted = None;
            while *eta > 1e-14 {
                let mut cand = s.clone();
                for ω in 0..n_states {
                    let top = net
                        .iter()
                        .filter_map(|g| g.as_ref().map(|g| g[ω]))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for (a, g) in net.iter().enumerate() {
                        cand[a][ω] = match g {
                            Some(g) => s[a][ω] * exp(*eta * (g[ω] - top)),
                            None => 0.0,
                        };
                        total += cand[a][ω];
                    }
                    for row in cand.iter_mut() {
                        row[ω] /= total;
                    }
                }
                let jc = self.objective(&cand);
                let ascent: f64 = net
                    .iter()
                    .enumerate()
                    .filter_map(|(a, g)| g.as_ref().map(|g| (a, g)))
                    .map(|(a, g)| (0..n_states).map(|ω| self.m0[ω] * g[ω] * (cand[a][ω] - s[a][ω])).sum::<f64>())
                    .sum();
                if jc >= j + 1e-4 * ascent - 1e-15 * j.abs().max(1.0) {
                    accepted = Some((cand, jc));
                    break;
                }
                *eta *= 0.5;
            }
            let Some((cand, jc)) = accepted else {
                return Ok(step);
            };
            let gain = jc - j;
            *s = cand;
            j = jc;
            *eta = (*eta * 1.5).min(1e8);
            if let Some(t) = trace.as_deref_mut() {
                t.push(j);
            }
            if gain <= 1e-15 * j.abs().max(1.0) {
                flat += 1;
                if flat >= 20 {
                    return Ok(step + 1);
                }
            } else {
                flat = 0;
            }
        }
        Ok(budget)
    }

    /// Active-set Newton on the first-order system. `None` when the polish
    /// fails; `s` is then meaningless.
    fn polish(&self, s: &mut [Vec<f64>], tol: f64) -> Result<Option<usize>> {
        let (n_actions, n_states) = (self.n_actions(), self.n_states());
        let mut free: Vec<Vec<bool>> = s.iter().map(|row| row.iter().map(|&x| x > FREE_THRESHOLD).collect()).collect();
        for ω in 0..n_states {
            for a in 0..n_actions {
                if !free[a][ω] {
                    s[a][ω] = 0.0;
                }
            }
            let total: f64 = s.iter().map(|row| row[ω]).sum();
            s.iter_mut().for_each(|row| row[ω] /= total);
        }
        let mut steps = 0;
        for _ in 0..ACTIVE_SET_ROUNDS {
            let Some((lambda, n)) = self.newton(s, &mut free)? else {
                return Ok(None);
            };
            steps += n;
            let net = self.net(s)?;
            // Zero entries of used actions must not be profitable.
            let mut worst: Option<(usize, usize, f64)> = None;
            for (a, g) in net.iter().enumerate() {
                let Some(g) = g else { continue };
                for ω in 0..n_states {
                    if !free[a][ω] {
                        let gamma = lambda[ω] - g[ω];
                        if gamma < -tol * 1e-3 && worst.is_none_or(|w| gamma < w.2) {
                            worst = Some((a, ω, gamma));
                        }
                    }
                }
            }
            if let Some((a, ω, _)) = worst {
                free[a][ω] = true;
                s[a][ω] = 1e-6;
                let total: f64 = s.iter().map(|row| row[ω]).sum();
                s.iter_mut().for_each(|row| row[ω] /= total);
                continue;
            }
            // Unused actions must fail the entry test.
            let mut entry: Option<(usize, f64, Vec<f64>)> = None;
            for b in 0..n_actions {
                if net[b].is_some() {
                    continue;
                }
                let v: Vec<f64> = self.u[b].iter().zip(&lambda).map(|(u, l)| u - l).collect();
                if let Some((conj, mu)) = self.dc.best_response(&v) {
                    if conj > tol * 1e-3 && entry.as_ref().is_none_or(|e| conj > e.1) {
                        entry = Some((b, conj, mu));
                    }
                }
            }
            if let Some((b, _, mu)) = entry {
                for ω in 0..n_states {
                    let add = (READMIT_MASS * mu[ω] / self.m0[ω]).min(0.5);
                    for row in s.iter_mut() {
                        row[ω] *= 1.0 - add;
                    }
                    s[b][ω] = add;
                    free[b][ω] = add > 0.0;
                }
                continue;
            }
            return Ok(Some(steps));
        }
        Ok(None)
    }

    /// Newton iterations on `(s_free, λ)` for
    /// `u_a(ω) − ∇c_{μ_a}(ω) = λ(ω)` on free entries and unit column sums.
    /// Entries that would turn negative leave the free set.
    fn newton(&self, s: &mut [Vec<f64>], free: &mut [Vec<bool>]) -> Result<Option<(Vec<f64>, usize)>> {
        let n_states = self.n_states();
        let mut lambda = vec![0.0; n_states];
        {
            let net = self.net(s)?;
            for ω in 0..n_states {
                let (mut num, mut den) = (0.0, 0.0);
                for (a, g) in net.iter().enumerate() {
                    if let (Some(g), true) = (g, free[a][ω]) {
                        num += s[a][ω] * g[ω];
                        den += s[a][ω];
                    }
                }
                lambda[ω] = if den > 0.0 { num / den } else { 0.0 };
            }
        }
        for step in 0..NEWTON_STEPS {
            let idx: Vec<(usize, usize)> = (0..self.n_actions())
                .flat_map(|a| (0..n_states).map(move |ω| (a, ω)))
                .filter(|&(a, ω)| free[a][ω])
                .collect();
            let f = self.kkt_residual(s, &idx, &lambda)?;
            let norm = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if norm < NEWTON_TOL {
                return Ok(Some((lambda, step)));
            }
            let jac = self.kkt_jacobian(s, &idx)?;
            let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
            let delta = match linalg::solve(&jac, &rhs) {
                Some(d) => d,
                None => match regularized(&jac, &rhs) {
                    Some(d) => d,
                    None => return Ok(None),
                },
            };
            let nv = idx.len();
            // Largest step keeping free entries nonnegative.
            let mut alpha_max = 1.0f64;
            for (k, &(a, ω)) in idx.iter().enumerate() {
                if delta[k] < 0.0 {
                    alpha_max = alpha_max.min(s[a][ω] / -delta[k]);
                }
            }
            if alpha_max < 1.0 {
                for (k, &(a, ω)) in idx.iter().enumerate() {
                    let v = s[a][ω] + alpha_max * delta[k];
                    if delta[k] < 0.0 && v <= 1e-15 {
                        s[a][ω] = 0.0;
                        free[a][ω] = false;
                    } else {
                        s[a][ω] = v.max(0.0);
                    }
                }
                for ω in 0..n_states {
                    lambda[ω] += alpha_max * delta[nv + ω];
                    let total: f64 = s.iter().map(|row| row[ω]).sum();
                    if total <= 0.0 {
                        return Ok(None);
                    }
                    s.iter_mut().for_each(|row| row[ω] /= total);
                }
                continue;
            }
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let mut trial: Vec<Vec<f64>> = s.to_vec();
                for (k, &(a, ω)) in idx.iter().enumerate() {
                    trial[a][ω] = (s[a][ω] + alpha * delta[k]).max(0.0);
                }
                let trial_lambda: Vec<f64> = (0..n_states).map(|ω| lambda[ω] + alpha * delta[nv + ω]).collect();
                let ok = match self.kkt_residual(&trial, &idx, &trial_lambda) {
                    Ok(ft) => ft.iter().fold(0.0f64, |m, x| m.max(x.abs())) < norm * (1.0 - 1e-4 * alpha),
                    Err(Error::BoundaryTrap(_)) => false,
                    Err(e) => return Err(e),
                };
                if ok {
                    s.clone_from_slice(&trial);
                    lambda = trial_lambda;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                // Accept a polish that is already as accurate as rounding
                // allows.
                return Ok(if norm < 1e-11 { Some((lambda, step)) } else { None });
            }
        }
        Ok(None)
    }

    fn kkt_residual(&self, s: &[Vec<f64>], idx: &[(usize, usize)], lambda: &[f64]) -> Result<Vec<f64>> {
        let n_states = self.n_states();
        let mut out = Vec::with_capacity(idx.len() + n_states);
        let net = self.net(s)?;
        for &(a, ω) in idx {
            match &net[a] {
                Some(g) => out.push(g[ω] - lambda[ω]),
                None => return Err(self.trap(a, "free entry in an unused action")),
            }
        }
        for ω in 0..n_states {
            out.push(s.iter().map(|row| row[ω]).sum::<f64>() - 1.0);
        }
        Ok(out)
    }

    fn kkt_jacobian(&self, s: &[Vec<f64>], idx: &[(usize, usize)]) -> Result<Mat> {
        let n_states = self.n_states();
        let nv = idx.len() + n_states;
        let mut jac = Mat::zeros(nv, nv);
        for (col, &(a, w2)) in idx.iter().enumerate() {
            // Net payoff of row `a` depends only on row `a`.
            let x = s[a][w2];
            let h = 1e-6 * x.abs().max(1e-3);
            let mut up = s[a].clone();
            up[w2] = x + h;
            let mut down = s[a].clone();
            down[w2] = x - h;
            let (gu, gd, width) = match (self.row_net(a, &up)?, self.row_net(a, &down)) {
                (Some(gu), Ok(Some(gd))) => (gu, gd, 2.0 * h),
                (Some(gu), _) => {
                    let g0 = self.row_net(a, &s[a])?.ok_or_else(|| self.trap(a, "unused"))?;
                    (gu, g0, h)
                }
                (None, _) => return Err(self.trap(a, "unused")),
            };
            for (row, &(b, ω)) in idx.iter().enumerate() {
                if b == a {
                    jac.set(row, col, (gu[ω] - gd[ω]) / width);
                }
            }
            jac.set(idx.len() + w2, col, 1.0);
        }
        for (row, &(_, ω)) in idx.iter().enumerate() {
            jac.set(row, idx.len() + ω, -1.0);
        }
        Ok(jac)
    }
}

/// Levenberg–Marquardt step `(JᵀJ + μI)⁻¹ Jᵀ r` for a singular Jacobian.
fn regularized(jac: &Mat, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = jac.cols();
    let jt = jac.transpose();
    let mut normal = Mat::zeros(n, n);
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..jac.rows()).map(|k| jac.get(k, i) * jac.get(k, j)).sum();
            normal.set(i, j, v);
        }
        scale = scale.max(normal.get(i, i));
    }
    for i in 0..n {
        normal.add(i, i, 1e-10 * scale.max(1e-300));
    }
    let b: Vec<f64> = (0..n).map(|i| (0..jt.cols()).map(|k| jt.get(i, k) * rhs[k]).sum()).collect();
    linalg::solve(&normal, &b)
}

fn inner_cost(m0: &[f64], inner: &DivergenceSpec, probs: &[Vec<f64>]) -> f64 {
    probs
        .iter()
        .map(|row| {
            let p: f64 = row.iter().zip(m0).map(|(s, w)| s * w).sum();
            if p <= 0.0 {
                return 0.0;
            }
            let mu: Vec<f64> = row.iter().zip(m0).map(|(s, w)| w * s / p).collect();
            p * inner.value(m0, &mu)
        })
        .sum()
}

/// `ψ ∘ C_c` with nonlinear `ψ`: bracket the derivative weight `w` with
/// `F(w) = ψ′(C_c(s*(w))) − w`, which is nonincreasing, then refine by
/// false position.
pub(crate) fn solve_transformed(
    menu: &Menu,
    prior: &Prior,
    spec: &CostSpec,
    inner: &DivergenceSpec,
    psi: &PsiSpec,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let m0 = prior.weights();
    let u = menu.utilities();
    let mut iterations = 0usize;
    let mut eval = |w: f64| -> Result<(FixedOutcome, f64)> {
        let dc = DerivativeCost::new(prior.clone(), inner.clone(), w);
        let out = solve_fixed(u, prior, &dc, opts)?;
        iterations += out.iterations;
        let f = psi.derivative(inner_cost(m0, inner, &out.probs)) - w;
        Ok((out, f))
    };
    let close = |f: f64, w: f64| f.abs() <= WEIGHT_TOL * w.abs().max(1.0);

    let w_lo0 = psi.derivative(0.0);
    let (out_lo, f_lo) = eval(w_lo0)?;
    let mut best = (w_lo0, out_lo, f_lo);
    if !close(f_lo, w_lo0) {
        let w_hi0 = w_lo0 + f_lo;
        let (out_hi, f_hi) = eval(w_hi0)?;
        let (mut lo, mut hi) = ((w_lo0, f_lo), (w_hi0, f_hi));
        best = (w_hi0, out_hi, f_hi);
        let mut last = 0i8;
        for _ in 0..200 {
            if close(best.2, best.0) || hi.0 - lo.0 <= WEIGHT_TOL * hi.0.abs().max(1.0) {
                break;
            }
            let mut w = if lo.1 - hi.1 > 0.0 {
                (lo.0 * -hi.1 + hi.0 * lo.1) / (lo.1 - hi.1)
            } else {
                0.5 * (lo.0 + hi.0)
            };
            if !(w > lo.0 && w < hi.0) {
                w = 0.5 * (lo.0 + hi.0);
            }
            let (out, f) = eval(w)?;
            // Illinois: halve the stale endpoint's value on repeated sides.
            if f > 0.0 {
                lo = (w, f);
                if last == 1 {
                    hi.1 *= 0.5;
                }
                last = 1;
            } else {
                hi = (w, f);
                if last == -1 {
                    lo.1 *= 0.5;
                }
                last = -1;
            }
            best = (w, out, f);
        }
    }
    let (weight, out, _) = best;
    let scr = Scr::clamped(out.probs);
    let value = menu.expected_utility(prior, &scr)? - crate::revealed::kappa(spec, &scr, prior)?;
    let policy = crate::revealed::reveal(&scr, prior)?.to_policy();
    let dc = spec.derivative(&policy)?;
    let residual = inverse::first_order(u, m0, scr.probs(), &dc)?.residual;
    let tol = opts.tol.unwrap_or(PS_TOL);
    if residual > tol {
        return Err(Error::NonConvergence { iterations, residual });
    }
    Ok(SolveResult {
        scr,
        value,
        iterations,
        residual,
        method: out.method,
        derivative_weight: weight,
        trace: out.trace,
    })
}
