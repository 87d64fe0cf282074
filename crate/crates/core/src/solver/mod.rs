//! Forward solvers for `max_s E[u·s] − κ(s)`.
//!
//! - [`solve_mi`]: Blahut–Arimoto on the logit fixed point, for mutual
//!   information.
//! - [`solve_ps`]: posterior-separable and transformed costs. KL divergences
//!   reuse Blahut–Arimoto; other divergences run exponentiated-gradient
//!   ascent followed by an active-set Newton polish of the first-order
//!   conditions. Transformed costs add an outer fixed point on the derivative
//!   weight `ψ′(∫c dp)`.
//! - [`grid_oracle`]: brute-force concavification on a belief lattice.

mod mi;
mod oracle;
mod probes;
mod ps;

use alloc::vec::Vec;

use crate::costs::{CostKind, CostSpec, PsiSpec};
use crate::error::{Error, Result};
use crate::model::{Menu, Prior, Scr};

pub(crate) use oracle::lattice as oracle_lattice;
pub use oracle::{grid_oracle, GridOracleResult, DEFAULT_RESOLUTION_2, DEFAULT_RESOLUTION_3};
pub use probes::{
    uniqueness_probe, value_convexity_probe, ConvexityReport, UniquenessProbeReport,
};

/// Default tolerance of the Blahut–Arimoto solver.
pub const MI_TOL: f64 = 1e-10;
/// Default first-order residual tolerance of the posterior-separable solver.
pub const PS_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Starting point of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Uniform marginals (mutual information) or the uniform SCR.
    #[default]
    Uniform,
    /// Seeded random interior start.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// `None` picks [`MI_TOL`] or [`PS_TOL`] by method.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub init: Init,
    /// Keep the objective value of every iterate in [`SolveResult::trace`].
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_iter: DEFAULT_MAX_ITER,
            init: Init::Uniform,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    BlahutArimoto,
    MirrorNewton,
    /// Free information: each state picks its best action.
    Argmax,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BlahutArimoto => "blahut_arimoto",
            Self::MirrorNewton => "mirror_newton",
            Self::Argmax => "argmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub scr: Scr,
    /// `E[u·s] − κ(s)`.
    pub value: f64,
    pub iterations: usize,
    /// First-order residual at the returned SCR.
    pub residual: f64,
    pub method: SolveMethod,
    /// Derivative weight `ψ′(∫c dp)` at the solution (1 for untransformed
    /// posterior-separable costs, the scale for mutual information).
    pub derivative_weight: f64,
    /// Objective per iteration when requested.
    pub trace: Vec<f64>,
}

fn check_inputs(menu: &Menu, prior: &Prior) -> Result<()> {
    prior.ensure_states("menu states", menu.n_states())
}

/// Solves with whichever method fits the cost.
pub fn solve(menu: &Menu, prior: &Prior, spec: &CostSpec, opts: &SolveOptions) -> Result<SolveResult> {
    match spec.kind() {
        CostKind::MutualInformation { scale } => {
            if spec.prior() != prior {
                return Err(Error::PriorMismatch("cost and menu use different priors"));
            }
            solve_mi(menu, prior, *scale, opts)
        }
        _ => solve_ps(menu, prior, spec, opts),
    }
}

/// Mutual-information cost at `scale`.
pub fn solve_mi(menu: &Menu, prior: &Prior, scale: f64, opts: &SolveOptions) -> Result<SolveResult> {
    check_inputs(menu, prior)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(crate::model::invalid("scale", alloc::format!("scale {scale} must be positive")));
    }
    let tol = opts.tol.unwrap_or(MI_TOL);
    let out = mi::blahut_arimoto(menu.utilities(), prior.weights(), scale, tol, opts, None)?;
    let scr = Scr::clamped(out.probs);
    let value = menu.expected_utility(prior, &scr)? - scale * mi::mutual_information(prior.weights(), scr.probs());
    Ok(SolveResult {
        scr,
        value,
        iterations: out.iterations,
        residual: out.residual,
        method: SolveMethod::BlahutArimoto,
        derivative_weight: scale,
        trace: out.trace,
    })
}

/// Posterior-separable, and transformed posterior-separable, costs.
pub fn solve_ps(menu: &Menu, prior: &Prior, spec: &CostSpec, opts: &SolveOptions) -> Result<SolveResult> {
    check_inputs(menu, prior)?;
    if spec.prior() != prior {
        return Err(Error::PriorMismatch("cost and menu use different priors"));
    }
    match spec.kind() {
        CostKind::Quadratic { .. } | CostKind::MaxOverSet { .. } => Err(Error::Unsupported(
            "solving requires an iteratively differentiable cost (mutual information, posterior separable or transformed)"
                .into(),
        )),
        CostKind::Transformed { inner, psi } if !matches!(psi, PsiSpec::Identity | PsiSpec::Affine { .. }) => {
            ps::solve_transformed(menu, prior, spec, inner, psi, opts)
        }
        _ => {
            let (dc, _) = spec.affine_form().expect("affine cost");
            let out = ps::solve_fixed(menu.utilities(), prior, &dc, opts)?;
            let scr = Scr::clamped(out.probs);
            let value = menu.expected_utility(prior, &scr)? - crate::revealed::kappa(spec, &scr, prior)?;
            Ok(SolveResult {
                scr,
                value,
                iterations: out.iterations,
                residual: out.residual,
                method: out.method,
                derivative_weight: dc.factor(),
                trace: out.trace,
            })
        }
    }
}
