//! The problem file: one JSON object describing states, prior, menu, cost,
//! an optional observed SCR and solver options.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use infochoice::solver::SolveOptions;
use infochoice::{Belief, CostSpec, DivergenceSpec, Menu, Prior, PsiSpec, Scr, SimpleInfoPolicy};

use crate::error::{At, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub states: Vec<String>,
    pub prior: Vec<f64>,
    /// Defaults to `"0"`, `"1"`, … when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
    /// One row per action, one column per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scr: Option<Vec<Vec<f64>>>,
    /// Two information policies, for `blackwell`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<PolicyFile>>,
    #[serde(default)]
    pub options: OptionsFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostFile {
    MutualInformation {
        #[serde(default = "unit")]
        scale: f64,
    },
    PosteriorSeparable {
        divergence: DivergenceName,
    },
    Transformed {
        inner: DivergenceName,
        psi: PsiFile,
    },
    MaxOverSet {
        divergences: Vec<DivergenceName>,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceName {
    Kl,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PsiFile {
    Identity,
    Affine { a: f64, b: f64 },
    Power { exponent: f64 },
    Exp { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub beliefs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptionsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
}

const TOP_KEYS: &[&str] = &["states", "prior", "actions", "utilities", "cost", "scr", "policies", "options"];
const OPTION_KEYS: &[&str] = &["tol", "max_iter", "seed", "grid_resolution"];
const POLICY_KEYS: &[&str] = &["beliefs", "weights"];

fn cost_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "mutual_information" => &["type", "scale"],
        "posterior_separable" => &["type", "divergence"],
        "transformed" => &["type", "inner", "psi"],
        "max_over_set" => &["type", "divergences"],
        _ => &["type"],
    }
}

fn psi_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "affine" => &["type", "a", "b"],
        "power" => &["type", "exponent"],
        "exp" => &["type", "rate"],
        _ => &["type"],
    }
}

fn check_keys(value: &Value, allowed: &[&str], at: &str) -> Result<()> {
    if let Value::Object(map) = value {
        if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::schema(format!("{at}.{key}"), format!("unknown field {key:?}")));
        }
    }
    Ok(())
}

fn type_of(value: &Value) -> &str {
    value.get("type").and_then(Value::as_str).unwrap_or("")
}

/// Rejects fields the schema does not know about.
fn check_strict(value: &Value) -> Result<()> {
    check_keys(value, TOP_KEYS, "$")?;
    if let Some(options) = value.get("options") {
        check_keys(options, OPTION_KEYS, "$.options")?;
    }
    if let Some(cost) = value.get("cost") {
        check_keys(cost, cost_keys(type_of(cost)), "$.cost")?;
        if let Some(psi) = cost.get("psi") {
            check_keys(psi, psi_keys(type_of(psi)), "$.cost.psi")?;
        }
    }
    if let Some(Value::Array(policies)) = value.get("policies") {
        for (i, p) in policies.iter().enumerate() {
            check_keys(p, POLICY_KEYS, &format!("$.policies[{i}]"))?;
        }
    }
    Ok(())
}

fn parse_error(e: serde_json::Error) -> CliError {
    CliError::Parse {
        message: e.to_string(),
        location: format!("line {}, column {}", e.line(), e.column()),
    }
}

impl ProblemFile {
    pub fn parse(text: &str, strict: bool) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(parse_error)?;
        if strict {
            check_strict(&value)?;
        }
        // Re-parse from text so type errors carry line and column.
        serde_json::from_str(text).map_err(parse_error)
    }

    pub fn to_canonical(&self) -> String {
        crate::json::to_string(self)
    }
}

fn divergence(name: DivergenceName) -> DivergenceSpec {
    match name {
        DivergenceName::Kl => DivergenceSpec::Kl,
        DivergenceName::ChiSquare => DivergenceSpec::ChiSquare,
    }
}

/// A parsed problem file with its prior validated.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub prior: Prior,
}

impl Problem {
    pub fn new(file: ProblemFile) -> Result<Self> {
        let prior = Prior::new(file.states.clone(), file.prior.clone()).at("$.prior")?;
        Ok(Self { file, prior })
    }

    fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field
            .as_ref()
            .ok_or_else(|| CliError::schema(format!("$.{name}"), format!("this command needs {name:?}")))
    }

    fn action_labels(&self, n: usize) -> Result<Vec<String>> {
        match &self.file.actions {
            Some(labels) if labels.len() != n => Err(CliError::schema(
                "$.actions",
                format!("{} action labels for {n} rows", labels.len()),
            )),
            Some(labels) => Ok(labels.clone()),
            None => Ok((0..n).map(|a| a.to_string()).collect()),
        }
    }

    /// Number of actions, from whichever of actions, utilities or scr is given.
    pub fn n_actions(&self) -> Result<usize> {
        let f = &self.file;
        f.actions
            .as_ref()
            .map(Vec::len)
            .or_else(|| f.utilities.as_ref().map(Vec::len))
            .or_else(|| f.scr.as_ref().map(Vec::len))
            .ok_or_else(|| CliError::schema("$.actions", "this command needs \"actions\" or \"utilities\""))
    }

    pub fn labels(&self) -> Result<Vec<String>> {
        self.action_labels(self.n_actions()?)
    }

    pub fn menu(&self) -> Result<Menu> {
        let utilities = Self::require(&self.file.utilities, "utilities")?;
        let labels = self.action_labels(utilities.len())?;
        let menu = Menu::new(labels, utilities.clone()).at("$.utilities")?;
        if menu.n_states() != self.prior.len() {
            return Err(CliError::schema(
                "$.utilities",
                format!("{} columns for {} states", menu.n_states(), self.prior.len()),
            ));
        }
        Ok(menu)
    }

    pub fn cost(&self) -> Result<CostSpec> {
        let prior = &self.prior;
        let spec = match Self::require(&self.file.cost, "cost")? {
            CostFile::MutualInformation { scale } => CostSpec::mutual_information(prior, *scale),
            CostFile::PosteriorSeparable { divergence: d } => CostSpec::posterior_separable(prior, divergence(*d)),
            CostFile::Transformed { inner, psi } => {
                let psi = match *psi {
                    PsiFile::Identity => PsiSpec::Identity,
                    PsiFile::Affine { a, b } => PsiSpec::Affine { a, b },
                    PsiFile::Power { exponent } => PsiSpec::Power { exponent },
                    PsiFile::Exp { rate } => PsiSpec::Exp { rate },
                };
                CostSpec::transformed(prior, divergence(*inner), psi)
            }
            CostFile::MaxOverSet { divergences } => {
                CostSpec::max_over_set(prior, divergences.iter().map(|&d| divergence(d)).collect())
            }
        };
        spec.at("$.cost")
    }

    pub fn scr(&self) -> Result<Scr> {
        let probs = Self::require(&self.file.scr, "scr")?;
        let scr = Scr::new(probs.clone()).at("$.scr")?;
        if scr.n_states() != self.prior.len() {
            return Err(CliError::schema(
                "$.scr",
                format!("{} columns for {} states", scr.n_states(), self.prior.len()),
            ));
        }
        self.action_labels(scr.n_actions()).map_err(|_| {
            CliError::schema("$.scr", format!("{} rows for {} actions", scr.n_actions(), self.n_actions().unwrap_or(0)))
        })?;
        Ok(scr)
    }

    pub fn policies(&self) -> Result<Vec<SimpleInfoPolicy>> {
        let policies = Self::require(&self.file.policies, "policies")?;
        if policies.len() != 2 {
            return Err(CliError::schema("$.policies", format!("expected 2 policies, got {}", policies.len())));
        }
        policies
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let at = format!("$.policies[{i}]");
                let beliefs = p
                    .beliefs
                    .iter()
                    .map(|b| Belief::new(b.clone()))
                    .collect::<infochoice::Result<Vec<_>>>()
                    .at(&format!("{at}.beliefs"))?;
                SimpleInfoPolicy::new(self.prior.clone(), beliefs, p.weights.clone()).at(&at)
            })
            .collect()
    }

    pub fn solve_options(&self) -> SolveOptions {
        let o = &self.file.options;
        let mut opts = SolveOptions {
            tol: o.tol,
            ..SolveOptions::default()
        };
        if let Some(n) = o.max_iter {
            opts.max_iter = n;
        }
        opts
    }
}
