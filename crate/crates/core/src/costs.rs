//! Information cost functions on simple information policies.
//!
//! A [`CostSpec`] pairs a prior with one of five cost families. Smooth
//! families expose a *derivative cost* at each policy: a divergence
//! `c_p(μ)` (possibly rescaled) that prices small changes of the policy in a
//! posterior-separable way, together with its belief gradient `∇c_p(μ)`,
//! normalized so that `Σ_ω ∇c_p(μ)(ω) μ(ω) = c_p(μ)`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{dot, exp, ln, log_sum_exp, powf, xlogxy};
use crate::model::{invalid, Belief, Prior, SimpleInfoPolicy};
use crate::sampling;

/// Number of random midpoint tests run on custom divergences.
pub const CONVEXITY_TRIALS: usize = 1000;
/// Slack allowed in each midpoint test.
pub const CONVEXITY_TOL: f64 = 1e-9;

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type KernelFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// User-supplied convex divergence with a gradient oracle.
///
/// The oracle may return any gradient representative; it is shifted by a
/// constant to satisfy the normalization `Σ ∇c(μ)·μ = c(μ)`.
#[derive(Clone)]
pub struct CustomDivergence {
    name: String,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
}

impl CustomDivergence {
    /// Checks that `c(μ0)` is finite and runs [`CONVEXITY_TRIALS`] seeded
    /// midpoint tests on interior beliefs.
    pub fn new<V, G>(prior: &Prior, name: impl Into<String>, value: V, gradient: G) -> Result<Self>
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let name = name.into();
        let at_prior = value(prior.weights());
        if !at_prior.is_finite() {
            return Err(invalid("divergence", format!("{name}: value at the prior is not finite")));
        }
        let n = prior.len();
        let mut rng = sampling::rng(0x00c0_57ed);
        for _ in 0..CONVEXITY_TRIALS {
            let a = sampling::random_interior_simplex(&mut rng, n, 1e-3);
            let b = sampling::random_interior_simplex(&mut rng, n, 1e-3);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let lhs = value(&mid);
            let rhs = 0.5 * (value(&a) + value(&b));
            if !(lhs <= rhs + CONVEXITY_TOL) {
                return Err(invalid(
                    "divergence",
                    format!("{name}: midpoint convexity test failed ({lhs} > {rhs})"),
                ));
            }
        }
        Ok(Self {
            name,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDivergence").field("name", &self.name).finish()
    }
}

/// A convex function of the posterior, measured relative to the prior.
#[derive(Debug, Clone)]
pub enum DivergenceSpec {
    /// `Σ μ(ω) ln(μ(ω)/μ0(ω))`.
    Kl,
    /// `Σ μ(ω)²/μ0(ω) − 1`.
    ChiSquare,
    Custom(CustomDivergence),
}

impl DivergenceSpec {
    pub fn value(&self, prior: &[f64], mu: &[f64]) -> f64 {
        match self {
            Self::Kl => mu.iter().zip(prior).map(|(&m, &m0)| xlogxy(m, m0)).sum(),
            Self::ChiSquare => mu.iter().zip(prior).map(|(&m, &m0)| m * m / m0).sum::<f64>() - 1.0,
            Self::Custom(c) => (c.value)(mu),
        }
    }

    /// Normalized gradient at `mu`. KL refuses beliefs with a zero
    /// coordinate.
    pub fn gradient(&self, prior: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Kl => {
                if let Some(state) = mu.iter().position(|&m| m <= 0.0) {
                    return Err(Error::BoundaryBelief { state });
                }
                Ok(mu.iter().zip(prior).map(|(&m, &m0)| ln(m / m0)).collect())
            }
            Self::ChiSquare => {
                let q: f64 = mu.iter().zip(prior).map(|(&m, &m0)| m * m / m0).sum();
                Ok(mu
                    .iter()
                    .zip(prior)
                    .map(|(&m, &m0)| 2.0 * m / m0 - q - 1.0)
                    .collect())
            }
            Self::Custom(c) => {
                let mut g = (c.gradient)(mu);
                if g.len() != mu.len() {
                    return Err(Error::DimensionMismatch {
                        what: "custom gradient",
                        expected: mu.len(),
                        got: g.len(),
                    });
                }
                let shift = (c.value)(mu) - dot(&g, mu);
                g.iter_mut().for_each(|x| *x += shift);
                Ok(g)
            }
        }
    }

    /// Whether the gradient stays bounded on the boundary of the simplex.
    pub fn smooth_at_boundary(&self) -> bool {
        matches!(self, Self::ChiSquare)
    }
}

/// Nondecreasing convex transform applied to a posterior-separable cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiSpec {
    Identity,
    /// `a·x + b`, `a ≥ 0`.
    Affine { a: f64, b: f64 },
    /// `max(x, 0)^γ`, `γ ≥ 1`.
    Power { exponent: f64 },
    /// `exp(rate·x) − 1`, `rate > 0`.
    Exp { rate: f64 },
}

impl PsiSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Identity => true,
            Self::Affine { a, b } => a.is_finite() && b.is_finite() && a >= 0.0,
            Self::Power { exponent } => exponent.is_finite() && exponent >= 1.0,
            Self::Exp { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("psi", format!("{self:?} is not nondecreasing and convex")))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::Affine { a, b } => a * x + b,
            Self::Power { exponent } => powf(x.max(0.0), exponent),
            Self::Exp { rate } => exp(rate * x) - 1.0,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::Affine { a, .. } => a,
            Self::Power { exponent } => {
                if exponent == 1.0 {
                    1.0
                } else {
                    exponent * powf(x.max(0.0), exponent - 1.0)
                }
            }
            Self::Exp { rate } => rate * exp(rate * x),
        }
    }
}

/// Symmetric kernel `c̃(μ, ν)` of a quadratic cost.
#[derive(Clone)]
pub struct QuadraticKernel {
    kernel: Arc<KernelFn>,
}

impl QuadraticKernel {
    pub fn new<K>(kernel: K) -> Self
    where
        K: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            kernel: Arc::new(kernel),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.kernel)(a, b)
    }
}

impl fmt::Debug for QuadraticKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("QuadraticKernel")
    }
}

#[derive(Debug, Clone)]
pub enum CostKind {
    MutualInformation { scale: f64 },
    PosteriorSeparable { divergence: DivergenceSpec },
    Transformed { inner: DivergenceSpec, psi: PsiSpec },
    Quadratic { kernel: QuadraticKernel },
    MaxOverSet { divergences: Vec<DivergenceSpec> },
}

/// An information cost `C` bound to the prior it is measured against.
#[derive(Debug, Clone)]
pub struct CostSpec {
    prior: Prior,
    kind: CostKind,
}

/// Why a cost fails to be iteratively differentiable at a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonDifferentiability {
    /// A support belief sits on the simplex boundary where the gradient is
    /// unbounded.
    BoundaryBelief,
    /// The cost is a maximum of several smooth costs.
    Kink,
    /// The quadratic kernel supplies no belief gradient.
    QuadraticKernel,
}

impl NonDifferentiability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BoundaryBelief => "boundary belief",
            Self::Kink => "kink",
            Self::QuadraticKernel => "quadratic kernel without belief gradient",
        }
    }
}

/// Derivative cost `c_p = factor · c` at some policy `p`.
#[derive(Debug, Clone)]
pub struct DerivativeCost {
    prior: Prior,
    divergence: DivergenceSpec,
    factor: f64,
}

impl DerivativeCost {
    pub fn new(prior: Prior, divergence: DivergenceSpec, factor: f64) -> Self {
        Self {
            prior,
            divergence,
            factor,
        }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn divergence(&self) -> &DivergenceSpec {
        &self.divergence
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn value(&self, mu: &[f64]) -> f64 {
        if self.factor == 0.0 {
            return 0.0;
        }
        self.factor * self.divergence.value(self.prior.weights(), mu)
    }

    pub fn gradient(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if self.factor == 0.0 {
            return Ok(vec![0.0; mu.len()]);
        }
        let mut g = self.divergence.gradient(self.prior.weights(), mu)?;
        g.iter_mut().for_each(|x| *x *= self.factor);
        Ok(g)
    }

    pub fn smooth_at_boundary(&self) -> bool {
        self.factor == 0.0 || self.divergence.smooth_at_boundary()
    }

    /// `max_{μ ∈ Δ} [v·μ − c_p(μ)]` and its maximizer, in closed form for KL
    /// and χ². `None` for custom divergences.
    pub fn best_response(&self, v: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = v.len();
        let prior = self.prior.weights();
        if self.factor == 0.0 {
            let (arg, &best) = v
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |b, c| if *c.1 > *b.1 { c } else { b });
            let mut mu = vec![0.0; n];
            mu[arg] = 1.0;
            return Some((best, mu));
        }
        let f = self.factor;
        match self.divergence {
            DivergenceSpec::Kl => {
                let logits: Vec<f64> = v.iter().zip(prior).map(|(&x, &m0)| ln(m0) + x / f).collect();
                let lse = log_sum_exp(logits.iter().copied());
                let mu = logits.iter().map(|&l| exp(l - lse)).collect();
                Some((f * lse, mu))
            }
            DivergenceSpec::ChiSquare => {
                // μ(ω) = μ0(ω)·max(0, v(ω) − τ)/(2f) with Σμ = 1.
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(core::cmp::Ordering::Equal));
                let mut mass = 0.0;
                let mut weighted = 0.0;
                let mut tau = f64::NAN;
                for (k, &i) in order.iter().enumerate() {
                    mass += prior[i];
                    weighted += prior[i] * v[i];
                    let cand = (weighted - 2.0 * f) / mass;
                    let next_ok = k + 1 == n || v[order[k + 1]] <= cand;
                    if v[i] > cand && next_ok {
                        tau = cand;
                        break;
                    }
                }
                let mu: Vec<f64> = v
                    .iter()
                    .zip(prior)
                    .map(|(&x, &m0)| m0 * (x - tau).max(0.0) / (2.0 * f))
                    .collect();
                let value = dot(v, &mu) - self.value(&mu);
                Some((value, mu))
            }
            DivergenceSpec::Custom(_) => None,
        }
    }
}

/// Whether `spec` is iteratively differentiable at a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Differentiability {
    pub differentiable: bool,
    pub reason: Option<NonDifferentiability>,
}

impl CostSpec {
    pub fn new(prior: Prior, kind: CostKind) -> Result<Self> {
        match &kind {
            CostKind::MutualInformation { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(invalid("cost.scale", format!("scale {scale} must be positive")));
                }
            }
            CostKind::Transformed { psi, .. } => psi.validate()?,
            CostKind::MaxOverSet { divergences } => {
                if divergences.is_empty() {
                    return Err(invalid("cost.divergences", "max-over-set needs at least one divergence"));
                }
            }
            CostKind::PosteriorSeparable { .. } | CostKind::Quadratic { .. } => {}
        }
        Ok(Self { prior, kind })
    }

    pub fn mutual_information(prior: &Prior, scale: f64) -> Result<Self> {
        Self::new(prior.clone(), CostKind::MutualInformation { scale })
    }

    pub fn posterior_separable(prior: &Prior, divergence: DivergenceSpec) -> Result<Self> {
        Self::new(prior.clone(), CostKind::PosteriorSeparable { divergence })
    }

    pub fn transformed(prior: &Prior, inner: DivergenceSpec, psi: PsiSpec) -> Result<Self> {
        Self::new(prior.clone(), CostKind::Transformed { inner, psi })
    }

    /// Quadratic costs need a positive semidefinite kernel, which cannot be
    /// checked here; the caller has to assert it.
    pub fn quadratic(prior: &Prior, kernel: QuadraticKernel, declared_psd: bool) -> Result<Self> {
        if !declared_psd {
            return Err(invalid("cost.kernel", "quadratic kernel must be declared positive semidefinite"));
        }
        Self::new(prior.clone(), CostKind::Quadratic { kernel })
    }

    pub fn max_over_set(prior: &Prior, divergences: Vec<DivergenceSpec>) -> Result<Self> {
        Self::new(prior.clone(), CostKind::MaxOverSet { divergences })
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn is_mutual_information(&self) -> bool {
        matches!(self.kind, CostKind::MutualInformation { .. })
    }

    fn check_policy(&self, policy: &SimpleInfoPolicy) -> Result<()> {
        if policy.prior() != &self.prior {
            return Err(Error::PriorMismatch("policy and cost use different priors"));
        }
        Ok(())
    }

    fn check_belief(&self, belief: &Belief) -> Result<()> {
        self.prior.ensure_states("belief states", belief.len())
    }

    /// `C(p)`.
    pub fn eval(&self, policy: &SimpleInfoPolicy) -> Result<f64> {
        self.check_policy(policy)?;
        let m0 = self.prior.weights();
        let separable = |d: &DivergenceSpec| -> f64 {
            policy.support().map(|(b, w)| w * d.value(m0, b.weights())).sum()
        };
        Ok(match &self.kind {
            CostKind::MutualInformation { scale } => scale * separable(&DivergenceSpec::Kl),
            CostKind::PosteriorSeparable { divergence } => separable(divergence),
            CostKind::Transformed { inner, psi } => psi.value(separable(inner)),
            CostKind::Quadratic { kernel } => {
                let support: Vec<(&Belief, f64)> = policy.support().collect();
                let mut total = 0.0;
                for &(a, wa) in &support {
                    for &(b, wb) in &support {
                        total += wa * wb * kernel.eval(a.weights(), b.weights());
                    }
                }
                total
            }
            CostKind::MaxOverSet { divergences } => divergences
                .iter()
                .map(separable)
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Derivative cost at `policy`.
    pub fn derivative(&self, policy: &SimpleInfoPolicy) -> Result<DerivativeCost> {
        self.check_policy(policy)?;
        let prior = self.prior.clone();
        match &self.kind {
            CostKind::MutualInformation { scale } => Ok(DerivativeCost::new(prior, DivergenceSpec::Kl, *scale)),
            CostKind::PosteriorSeparable { divergence } => Ok(DerivativeCost::new(prior, divergence.clone(), 1.0)),
            CostKind::Transformed { inner, psi } => {
                let m0 = self.prior.weights();
                let base: f64 = policy.support().map(|(b, w)| w * inner.value(m0, b.weights())).sum();
                Ok(DerivativeCost::new(prior, inner.clone(), psi.derivative(base)))
            }
            CostKind::Quadratic { .. } => Err(Error::Unsupported(
                "quadratic costs are evaluation-only (no kernel gradient)".into(),
            )),
            CostKind::MaxOverSet { .. } => Err(Error::Unsupported(
                "max-over-set costs are evaluation-only (not differentiable)".into(),
            )),
        }
    }

    /// Derivative cost evaluated at a belief, `c_p(μ)`.
    pub fn derivative_value(&self, at_policy: &SimpleInfoPolicy, belief: &Belief) -> Result<f64> {
        self.check_belief(belief)?;
        Ok(self.derivative(at_policy)?.value(belief.weights()))
    }

    /// Normalized belief gradient of the derivative cost, `∇c_p(μ)`.
    pub fn cost_gradient(&self, at_policy: &SimpleInfoPolicy, belief: &Belief) -> Result<Vec<f64>> {
        self.check_belief(belief)?;
        self.derivative(at_policy)?.gradient(belief.weights())
    }

    pub fn is_iteratively_differentiable(&self, policy: &SimpleInfoPolicy) -> Differentiability {
        let no = |reason| Differentiability {
            differentiable: false,
            reason: Some(reason),
        };
        let derivative = match (&self.kind, self.derivative(policy)) {
            (CostKind::MaxOverSet { .. }, _) => return no(NonDifferentiability::Kink),
            (CostKind::Quadratic { .. }, _) => return no(NonDifferentiability::QuadraticKernel),
            (_, Ok(d)) => d,
            (_, Err(_)) => return no(NonDifferentiability::Kink),
        };
        if !derivative.smooth_at_boundary() && !policy.is_fully_mixed() {
            return no(NonDifferentiability::BoundaryBelief);
        }
        Differentiability {
            differentiable: true,
            reason: None,
        }
    }

    /// For costs affine in the policy, `C(p) = Σ w·c_fixed(μ) + constant`:
    /// the fixed derivative cost and the constant.
    pub fn affine_form(&self) -> Option<(DerivativeCost, f64)> {
        let prior = self.prior.clone();
        match &self.kind {
            CostKind::MutualInformation { scale } => Some((DerivativeCost::new(prior, DivergenceSpec::Kl, *scale), 0.0)),
            CostKind::PosteriorSeparable { divergence } => Some((DerivativeCost::new(prior, divergence.clone(), 1.0), 0.0)),
            CostKind::Transformed { inner, psi } => match *psi {
                PsiSpec::Identity => Some((DerivativeCost::new(prior, inner.clone(), 1.0), 0.0)),
                PsiSpec::Affine { a, b } => Some((DerivativeCost::new(prior, inner.clone(), a), b)),
                PsiSpec::Power { exponent } if exponent == 1.0 => {
                    Some((DerivativeCost::new(prior, inner.clone(), 1.0), 0.0))
                }
                _ => None,
            },
            CostKind::Quadratic { .. } | CostKind::MaxOverSet { .. } => None,
        }
    }

    /// Whether `C` is finite at every simple information policy. Custom
    /// divergences are probed at the vertices of the simplex.
    pub fn is_finite_on_simple_policies(&self) -> bool {
        let n = self.prior.len();
        let finite_div = |d: &DivergenceSpec| match d {
            DivergenceSpec::Kl | DivergenceSpec::ChiSquare => true,
            DivergenceSpec::Custom(c) => (0..n).all(|ω| {
                let vertex = Belief::point_mass(n, ω);
                (c.value)(vertex.weights()).is_finite()
            }),
        };
        match &self.kind {
            CostKind::MutualInformation { .. } => true,
            CostKind::PosteriorSeparable { divergence } => finite_div(divergence),
            CostKind::Transformed { inner, .. } => finite_div(inner),
            CostKind::Quadratic { .. } => true,
            CostKind::MaxOverSet { divergences } => divergences.iter().all(finite_div),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = core::f64::consts::LN_2;

    fn binary() -> Prior {
        Prior::uniform(2).unwrap()
    }

    fn policy(prior: &Prior, beliefs: &[[f64; 2]], weights: &[f64]) -> SimpleInfoPolicy {
        SimpleInfoPolicy::new(
            prior.clone(),
            beliefs.iter().map(|b| Belief::new(b.to_vec()).unwrap()).collect(),
            weights.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn mutual_information_values() {
        let prior = binary();
        let mi = CostSpec::mutual_information(&prior, 1.0).unwrap();
        assert_eq!(mi.eval(&SimpleInfoPolicy::uninformative(&prior)).unwrap(), 0.0);
        let full = SimpleInfoPolicy::fully_revealing(&prior);
        assert!((mi.eval(&full).unwrap() - LN2).abs() < 1e-15);
        let p = policy(&prior, &[[0.25, 0.75], [0.75, 0.25]], &[0.5, 0.5]);
        let expected = 0.25 * libm::log(0.5) + 0.75 * libm::log(1.5);
        assert!((mi.eval(&p).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.130812).abs() < 1e-6);
    }

    #[test]
    fn derivative_values() {
        let prior = binary();
        let mu = Belief::new(vec![0.25, 0.75]).unwrap();
        let any = SimpleInfoPolicy::fully_revealing(&prior);
        let mi = CostSpec::mutual_information(&prior, 1.0).unwrap();
        assert_eq!(mi.derivative_value(&any, &prior.as_belief()).unwrap(), 0.0);
        let ps = CostSpec::posterior_separable(&prior, DivergenceSpec::Kl).unwrap();
        assert!((ps.derivative_value(&any, &mu).unwrap() - 0.130812).abs() < 1e-6);
        let tr = CostSpec::transformed(&prior, DivergenceSpec::Kl, PsiSpec::Power { exponent: 2.0 }).unwrap();
        let at_prior = SimpleInfoPolicy::uninformative(&prior);
        assert_eq!(tr.derivative_value(&at_prior, &mu).unwrap(), 0.0);
    }

    #[test]
    fn gradient_values() {
        let prior = binary();
        let mi = CostSpec::mutual_information(&prior, 1.0).unwrap();
        let p = SimpleInfoPolicy::uninformative(&prior);
        assert_eq!(mi.cost_gradient(&p, &prior.as_belief()).unwrap(), vec![0.0, 0.0]);
        let e = core::f64::consts::E;
        let mu = Belief::new(vec![e / (1.0 + e), 1.0 / (1.0 + e)]).unwrap();
        let g = mi.cost_gradient(&p, &mu).unwrap();
        assert!((g[0] - 0.379885).abs() < 1e-6 && (g[1] + 0.620115).abs() < 1e-6);
        assert!(matches!(
            mi.cost_gradient(&p, &Belief::point_mass(2, 0)),
            Err(Error::BoundaryBelief { state: 1 })
        ));
    }

    #[test]
    fn chi_square_gradient_is_normalized() {
        let prior = Prior::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
        let d = DerivativeCost::new(prior.clone(), DivergenceSpec::ChiSquare, 1.0);
        let mu = [0.5, 0.0, 0.5];
        let g = d.gradient(&mu).unwrap();
        assert!((dot(&g, &mu) - d.value(&mu)).abs() < 1e-14);
    }

    #[test]
    fn differentiability_classification() {
        let prior = binary();
        let mi = CostSpec::mutual_information(&prior, 1.0).unwrap();
        let mixed = policy(&prior, &[[0.25, 0.75], [0.75, 0.25]], &[0.5, 0.5]);
        assert!(mi.is_iteratively_differentiable(&mixed).differentiable);
        let boundary = policy(&prior, &[[1.0, 0.0], [0.0, 1.0]], &[0.5, 0.5]);
        let d = mi.is_iteratively_differentiable(&boundary);
        assert!(!d.differentiable);
        assert_eq!(d.reason.unwrap().as_str(), "boundary belief");
        let max = CostSpec::max_over_set(&prior, vec![DivergenceSpec::Kl, DivergenceSpec::ChiSquare]).unwrap();
        assert_eq!(max.is_iteratively_differentiable(&mixed).reason, Some(NonDifferentiability::Kink));
        let chi = CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap();
        assert!(chi.is_iteratively_differentiable(&boundary).differentiable);
    }

    #[test]
    fn best_response_matches_brute_force() {
        let prior = binary();
        let v = [0.7, -0.2];
        for div in [DivergenceSpec::Kl, DivergenceSpec::ChiSquare] {
            let d = DerivativeCost::new(prior.clone(), div, 0.8);
            let (value, mu) = d.best_response(&v).unwrap();
            let mut best = f64::NEG_INFINITY;
            for i in 0..=100_000 {
                let x = i as f64 / 100_000.0;
                let m = [x, 1.0 - x];
                best = best.max(dot(&v, &m) - d.value(&m));
            }
            assert!((value - best).abs() < 1e-8, "{value} vs {best}");
            assert!((dot(&v, &mu) - d.value(&mu) - value).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let prior = binary();
        assert!(CostSpec::mutual_information(&prior, 0.0).is_err());
        assert!(CostSpec::max_over_set(&prior, vec![]).is_err());
        assert!(CostSpec::transformed(&prior, DivergenceSpec::Kl, PsiSpec::Power { exponent: 0.5 }).is_err());
        let k = QuadraticKernel::new(|_, _| 0.0);
        assert!(CostSpec::quadratic(&prior, k.clone(), false).is_err());
        assert!(CostSpec::quadratic(&prior, k, true).is_ok());
        let concave = CustomDivergence::new(&prior, "neg-chi", |m| -(m[0] * m[0] + m[1] * m[1]), |m| {
            vec![-2.0 * m[0], -2.0 * m[1]]
        });
        assert!(concave.is_err());
    }

    #[test]
    fn mismatched_prior_is_an_error() {
        let a = binary();
        let b = Prior::from_weights(vec![0.4, 0.6]).unwrap();
        let mi = CostSpec::mutual_information(&a, 1.0).unwrap();
        assert!(matches!(
            mi.eval(&SimpleInfoPolicy::uninformative(&b)),
            Err(Error::PriorMismatch(_))
        ));
    }
}
