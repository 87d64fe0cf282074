//! Optimal stochastic choice under costly, flexible information acquisition.
//!
//! An agent facing a finite state space and a finite menu of actions picks an
//! information policy (a Bayes-plausible distribution over posterior beliefs)
//! and then acts. Her behavior is summarized by a stochastic choice rule (SCR)
//! `s_a(ω)`, the probability of taking action `a` in state `ω`. This crate
//! provides:
//!
//! - [`model`]: priors, beliefs, menus, SCRs and simple information policies;
//! - [`costs`]: information cost functions (mutual information, posterior
//!   separable, transformed, quadratic, max-over-set) with their derivatives;
//! - [`revealed`]: revealed information policies, the indirect cost `κ(s)`
//!   and the Blackwell order on finite-support policies;
//! - [`solver`]: forward solvers (Blahut–Arimoto for mutual information,
//!   mirror ascent with Newton polishing for smooth posterior-separable
//!   costs) and a brute-force concavification oracle;
//! - [`inverse`]: first-order optimality certificates, utility recovery,
//!   uniqueness checks and construction of equivalent optima;
//! - [`menus`]: predictions of behavior on every submenu from behavior on
//!   the grand menu.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
mod linalg;
mod lp;
mod math;

pub mod costs;
pub mod inverse;
pub mod menus;
pub mod model;
pub mod revealed;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};

pub use costs::{CostSpec, CustomDivergence, DivergenceSpec, PsiSpec, QuadraticKernel};
pub use inverse::{FocCertificate, RecoveredUtility, UniquenessReport, Verdict};
pub use menus::{ConsistencyReport, SubmenuForecast, SubmenuPrediction};
pub use model::{Belief, Menu, Prior, Scr, SimpleInfoPolicy, ValidationReport};
pub use revealed::{BlackwellVerdict, RevealedPolicy};
pub use solver::{GridOracleResult, Init, SolveMethod, SolveOptions, SolveResult};
