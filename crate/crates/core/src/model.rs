//! Domain types: priors, beliefs, menus, stochastic choice rules and simple
//! information policies.
//!
//! All types are immutable once built and validate their invariants on
//! construction. [`validate`] runs the same checks on raw data and reports
//! every violation instead of stopping at the first one.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Actions whose largest conditional probability does not exceed this value
/// are treated as unused.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Tolerance on the prior (and belief) sum.
pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// Tolerance on each state's action sum in an SCR.
pub const SCR_SUM_TOL: f64 = 1e-10;

/// Negative SCR entries down to this value are clamped to zero.
pub const SCR_NEG_TOL: f64 = 1e-12;

/// Tolerance on policy weight sums.
pub const POLICY_WEIGHT_TOL: f64 = 1e-10;

/// Tolerance on the barycenter of a policy versus its prior.
pub const BAYES_TOL: f64 = 1e-9;

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Where the problem is, e.g. `scr.state[x]`.
    pub location: String,
    pub message: String,
}

/// Every invariant violation found in a set of inputs. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }

    fn single(location: impl Into<String>, message: impl Into<String>) -> Self {
        let mut report = Self::default();
        report.push(location, message);
        report
    }

    fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

/// Full-support probability vector over labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    states: Arc<[String]>,
    weights: Arc<[f64]>,
}

impl Prior {
    pub fn new(states: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let mut report = ValidationReport::default();
        check_prior(&states, &weights, &mut report);
        report.into_result()?;
        Ok(Self {
            states: states.into(),
            weights: weights.into(),
        })
    }

    /// Prior with states labelled `0..n`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let states = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::new(states, weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(alloc::vec![1.0 / n as f64; n])
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The prior as a belief (the no-information posterior).
    pub fn as_belief(&self) -> Belief {
        Belief {
            weights: self.weights.to_vec(),
        }
    }

    pub(crate) fn ensure_states(&self, what: &'static str, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Probability vector over states, aligned with a prior's state order.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    weights: Vec<f64>,
}

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let mut report = ValidationReport::default();
        if weights.is_empty() {
            report.push("belief", "no states");
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                report.push(format!("belief[{i}]"), format!("weight {w} is not a probability"));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            report.push("belief", format!("weights sum to {sum} ≠ 1"));
        }
        report.into_result()?;
        Ok(Self { weights })
    }

    /// Builds a belief from weights known to be a probability vector up to
    /// rounding (e.g. Bayes posteriors); tiny negatives are clamped.
    pub(crate) fn from_raw(mut weights: Vec<f64>) -> Self {
        for w in &mut weights {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        Self { weights }
    }

    /// Degenerate belief on one state.
    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut weights = alloc::vec![0.0; n];
        weights[state] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Strictly positive in every state.
    pub fn is_fully_mixed(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// Labelled actions with a utility row `u_a(ω)` per action.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    actions: Vec<String>,
    utilities: Vec<Vec<f64>>,
}

impl Menu {
    pub fn new(actions: Vec<String>, utilities: Vec<Vec<f64>>) -> Result<Self> {
        let mut report = ValidationReport::default();
        check_menu(&actions, &utilities, None, &mut report);
        report.into_result()?;
        Ok(Self { actions, utilities })
    }

    /// Menu with actions labelled `0..n`.
    pub fn from_utilities(utilities: Vec<Vec<f64>>) -> Result<Self> {
        let actions = (0..utilities.len()).map(|i| i.to_string()).collect();
        Self::new(actions, utilities)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn utilities(&self) -> &[Vec<f64>] {
        &self.utilities
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_states(&self) -> usize {
        self.utilities.first().map_or(0, Vec::len)
    }

    /// Same labels, different utilities.
    pub fn with_utilities(&self, utilities: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.actions.clone(), utilities)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == label)
    }

    /// Restriction to the given action labels, keeping the original order.
    pub fn submenu<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptySubmenu);
        }
        let mut indices = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            match self.index_of(label) {
                Some(i) => indices.push(i),
                None => return Err(Error::UnknownAction(label.to_string())),
            }
        }
        self.submenu_indices(&indices)
    }

    /// Restriction to the given action indices, keeping the original order
    /// and ignoring duplicates.
    pub fn submenu_indices(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySubmenu);
        }
        let mut keep = alloc::vec![false; self.n_actions()];
        for &i in indices {
            if i >= self.n_actions() {
                return Err(Error::UnknownAction(format!("#{i}")));
            }
            keep[i] = true;
        }
        let (actions, utilities) = self
            .actions
            .iter()
            .zip(&self.utilities)
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|((a, u), _)| (a.clone(), u.clone()))
            .unzip();
        Ok(Self { actions, utilities })
    }

    /// `E_μ0[Σ_a u_a s_a]`.
    pub fn expected_utility(&self, prior: &Prior, scr: &Scr) -> Result<f64> {
        prior.ensure_states("menu states", self.n_states())?;
        prior.ensure_states("SCR states", scr.n_states())?;
        if scr.n_actions() != self.n_actions() {
            return Err(Error::DimensionMismatch {
                what: "SCR actions",
                expected: self.n_actions(),
                got: scr.n_actions(),
            });
        }
        let mut total = 0.0;
        for (u, s) in self.utilities.iter().zip(scr.probs()) {
            for ((&uw, &sw), &mw) in u.iter().zip(s).zip(prior.weights()) {
                total += mw * uw * sw;
            }
        }
        Ok(total)
    }
}

/// Stochastic choice rule: `probs[a][ω]` is the probability of action `a` in
/// state `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scr {
    probs: Vec<Vec<f64>>,
}

impl Scr {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let mut report = ValidationReport::default();
        check_scr(&probs, None, None, &mut report);
        report.into_result()?;
        Ok(Self::clamped(probs))
    }

    /// Clamps into `[0, 1]` without checking; for solver output whose column
    /// sums hold by construction.
    pub(crate) fn clamped(mut probs: Vec<Vec<f64>>) -> Self {
        for row in &mut probs {
            for v in row {
                *v = v.clamp(0.0, 1.0);
            }
        }
        Self { probs }
    }

    /// Every action equally likely in every state.
    pub fn uniform(n_actions: usize, n_states: usize) -> Self {
        Self {
            probs: alloc::vec![alloc::vec![1.0 / n_actions as f64; n_states]; n_actions],
        }
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn n_actions(&self) -> usize {
        self.probs.len()
    }

    pub fn n_states(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    pub fn into_probs(self) -> Vec<Vec<f64>> {
        self.probs
    }

    /// Actions whose largest conditional probability exceeds
    /// [`SUPPORT_THRESHOLD`].
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().copied().fold(0.0, f64::max) > SUPPORT_THRESHOLD)
            .map(|(a, _)| a)
            .collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.support().len() == self.n_actions()
    }

    /// Every action used with positive probability in every state.
    pub fn has_conditionally_full_support(&self) -> bool {
        self.probs.iter().flatten().all(|&v| v > 0.0)
    }

    /// Unconditional action probabilities `p_a = Σ_ω μ0(ω) s_a(ω)`.
    pub fn marginals(&self, prior: &Prior) -> Vec<f64> {
        self.probs
            .iter()
            .map(|row| crate::math::dot(row, prior.weights()))
            .collect()
    }

    /// Pointwise `β·self + (1−β)·other`.
    pub fn mix(&self, other: &Scr, beta: f64) -> Result<Scr> {
        if self.n_actions() != other.n_actions() || self.n_states() != other.n_states() {
            return Err(Error::DimensionMismatch {
                what: "SCR shape",
                expected: self.n_actions() * self.n_states(),
                got: other.n_actions() * other.n_states(),
            });
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| beta * x + (1.0 - beta) * y).collect())
            .collect();
        Ok(Scr::clamped(probs))
    }

    /// Largest pointwise difference.
    pub fn max_abs_diff(&self, other: &Scr) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| crate::math::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

/// Finite-support, Bayes-plausible distribution over beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleInfoPolicy {
    prior: Prior,
    beliefs: Vec<Belief>,
    weights: Vec<f64>,
}

impl SimpleInfoPolicy {
    pub fn new(prior: Prior, beliefs: Vec<Belief>, weights: Vec<f64>) -> Result<Self> {
        let mut report = ValidationReport::default();
        if beliefs.len() != weights.len() {
            report.push(
                "policy",
                format!("{} beliefs but {} weights", beliefs.len(), weights.len()),
            );
            return Err(Error::Invalid(report));
        }
        if beliefs.is_empty() {
            report.push("policy", "no beliefs");
        }
        for (i, b) in beliefs.iter().enumerate() {
            if b.len() != prior.len() {
                report.push(
                    format!("policy.belief[{i}]"),
                    format!("{} states, prior has {}", b.len(), prior.len()),
                );
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                report.push(format!("policy.weight[{i}]"), format!("weight {w} is negative"));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > POLICY_WEIGHT_TOL {
            report.push("policy", format!("weights sum to {sum} ≠ 1"));
        }
        if report.is_valid() {
            let bary = barycenter(&beliefs, &weights, prior.len());
            for (ω, (&m, &b)) in prior.weights().iter().zip(&bary).enumerate() {
                if (m - b).abs() > BAYES_TOL {
                    report.push(
                        format!("policy.state[{}]", prior.states()[ω]),
                        format!("barycenter {b} differs from prior {m}"),
                    );
                }
            }
        }
        report.into_result()?;
        Ok(Self {
            prior,
            beliefs,
            weights,
        })
    }

    /// Skips validation; used where Bayes plausibility holds by construction.
    pub(crate) fn new_unchecked(prior: Prior, beliefs: Vec<Belief>, weights: Vec<f64>) -> Self {
        Self {
            prior,
            beliefs,
            weights,
        }
    }

    /// The uninformative policy `δ_{μ0}`.
    pub fn uninformative(prior: &Prior) -> Self {
        Self {
            beliefs: alloc::vec![prior.as_belief()],
            weights: alloc::vec![1.0],
            prior: prior.clone(),
        }
    }

    /// Fully revealing policy: one point mass per state.
    pub fn fully_revealing(prior: &Prior) -> Self {
        let n = prior.len();
        Self {
            beliefs: (0..n).map(|ω| Belief::point_mass(n, ω)).collect(),
            weights: prior.weights().to_vec(),
            prior: prior.clone(),
        }
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn beliefs(&self) -> &[Belief] {
        &self.beliefs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(belief, weight)` pairs with positive weight.
    pub fn support(&self) -> impl Iterator<Item = (&Belief, f64)> {
        self.beliefs
            .iter()
            .zip(self.weights.iter().copied())
            .filter(|(_, w)| *w > 0.0)
    }

    /// Every support belief is strictly positive.
    pub fn is_fully_mixed(&self) -> bool {
        self.support().all(|(b, _)| b.is_fully_mixed())
    }

    pub fn barycenter(&self) -> Vec<f64> {
        barycenter(&self.beliefs, &self.weights, self.prior.len())
    }
}

fn barycenter(beliefs: &[Belief], weights: &[f64], n: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n];
    for (b, &w) in beliefs.iter().zip(weights) {
        for (o, &x) in out.iter_mut().zip(b.weights()) {
            *o += w * x;
        }
    }
    out
}

/// Raw, unvalidated problem data, as read from a file.
#[derive(Debug, Clone, Copy)]
pub struct ProblemDraft<'a> {
    pub states: &'a [String],
    pub prior: &'a [f64],
    pub actions: &'a [String],
    pub utilities: &'a [Vec<f64>],
    pub scr: Option<&'a [Vec<f64>]>,
}

/// Checks every invariant of a prior/menu/SCR triple and lists all
/// violations.
pub fn validate(draft: &ProblemDraft<'_>) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_prior(draft.states, draft.prior, &mut report);
    check_menu(draft.actions, draft.utilities, Some(draft.prior.len()), &mut report);
    if let Some(scr) = draft.scr {
        check_scr(scr, Some(draft.states), Some(draft.actions.len()), &mut report);
    }
    report
}

fn check_prior(states: &[String], weights: &[f64], report: &mut ValidationReport) {
    if weights.is_empty() {
        report.push("prior", "no states");
        return;
    }
    if states.len() != weights.len() {
        report.push(
            "prior",
            format!("{} state labels but {} weights", states.len(), weights.len()),
        );
    }
    let mut full_support = true;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            report.push(format!("prior[{i}]"), format!("weight {w} is not a probability"));
        } else if w == 0.0 {
            full_support = false;
        }
    }
    if !full_support {
        report.push("prior", "prior not full support");
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > PRIOR_SUM_TOL {
        report.push("prior", format!("weights sum to {sum} ≠ 1"));
    }
    for (i, s) in states.iter().enumerate() {
        if states[..i].contains(s) {
            report.push(format!("states[{i}]"), format!("duplicate state label {s:?}"));
        }
    }
}

fn check_menu(
    actions: &[String],
    utilities: &[Vec<f64>],
    n_states: Option<usize>,
    report: &mut ValidationReport,
) {
    if actions.is_empty() {
        report.push("actions", "menu has no actions");
    }
    if actions.len() != utilities.len() {
        report.push(
            "utilities",
            format!("{} actions but {} utility rows", actions.len(), utilities.len()),
        );
    }
    for (i, a) in actions.iter().enumerate() {
        if actions[..i].contains(a) {
            report.push(format!("actions[{i}]"), format!("duplicate action label {a:?}"));
        }
    }
    let width = n_states.or_else(|| utilities.first().map(Vec::len));
    for (a, row) in utilities.iter().enumerate() {
        if let Some(w) = width {
            if row.len() != w {
                report.push(
                    format!("utilities[{a}]"),
                    format!("{} entries, expected {w}", row.len()),
                );
            }
        }
        for (ω, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                report.push(format!("utilities[{a}][{ω}]"), format!("non-finite utility {v}"));
            }
        }
    }
}

fn check_scr(
    probs: &[Vec<f64>],
    states: Option<&[String]>,
    n_actions: Option<usize>,
    report: &mut ValidationReport,
) {
    if probs.is_empty() {
        report.push("scr", "no actions");
        return;
    }
    if let Some(n) = n_actions {
        if probs.len() != n {
            report.push("scr", format!("{} rows, menu has {n} actions", probs.len()));
        }
    }
    let width = states.map_or(probs[0].len(), <[String]>::len);
    for (a, row) in probs.iter().enumerate() {
        if row.len() != width {
            report.push(format!("scr[{a}]"), format!("{} entries, expected {width}", row.len()));
        }
        for (ω, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < -SCR_NEG_TOL || v > 1.0 + SCR_NEG_TOL {
                report.push(format!("scr[{a}][{ω}]"), format!("{v} is not a probability"));
            }
        }
    }
    for ω in 0..width {
        let sum: f64 = probs.iter().filter_map(|row| row.get(ω)).map(|v| v.clamp(0.0, 1.0)).sum();
        if (sum - 1.0).abs() > SCR_SUM_TOL {
            let label = states
                .and_then(|s| s.get(ω))
                .cloned()
                .unwrap_or_else(|| ω.to_string());
            report.push(
                format!("scr.state[{label}]"),
                format!("state {label}: action sum {sum} ≠ 1"),
            );
        }
    }
}

impl From<ValidationReport> for Error {
    fn from(r: ValidationReport) -> Self {
        Error::Invalid(r)
    }
}

pub(crate) fn invalid(location: &str, message: impl Into<String>) -> Error {
    Error::Invalid(ValidationReport::single(location, message))
}
