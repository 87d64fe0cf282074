use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use infochoice::inverse::{self, DEFAULT_TOL};
use infochoice::menus::predict_submenus;
use infochoice::revealed::{blackwell_geq, kappa, reveal};
use infochoice::solver::{grid_oracle, solve, uniqueness_probe};
use infochoice::{Belief, Scr};

use crate::error::{At, CliError, Result};
use crate::problem::{Problem, ProblemFile};

#[derive(Debug, Parser)]
#[command(name = "infochoice", version, about = "Optimal stochastic choice under costly information")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reject fields the problem schema does not define.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Problem file (`-` reads stdin).
    pub problem: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal SCR for the menu and cost.
    Solve {
        #[command(flatten)]
        input: Input,
        /// Emit the SCR as CSV (one row per action).
        #[arg(long)]
        csv: bool,
    },
    /// Revealed posteriors and their probabilities.
    Reveal(Input),
    /// Indirect cost of the SCR.
    Kappa {
        #[command(flatten)]
        input: Input,
        /// Instead, tabulate κ over an N×N grid of binary SCRs as CSV.
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
    },
    /// First-order optimality certificate for the SCR.
    Certify(Input),
    /// A utility that rationalizes the SCR.
    Invert(Input),
    /// Whether the SCR can be the unique optimum.
    Unique {
        #[command(flatten)]
        input: Input,
        /// Also look for a distinct optimal SCR with the same value.
        #[arg(long)]
        equivalent: bool,
    },
    /// Behavior on submenus predicted from the SCR (solved if absent).
    Predict {
        #[command(flatten)]
        input: Input,
        /// `all`, or submenus separated by `;`, each a `,`-separated list of
        /// action labels.
        #[arg(long, default_value = "all")]
        submenus: String,
    },
    /// Blackwell comparison of the two `policies`.
    Blackwell(Input),
    /// Brute-force optimum over a belief lattice.
    Oracle {
        #[command(flatten)]
        input: Input,
        /// Lattice resolution.
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
        #[arg(long)]
        csv: bool,
    },
    /// Solves random menus from several starts and reports the spread.
    Probe {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        seed: Option<u64>,
        /// Random menus to draw.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Random starts per menu.
        #[arg(long, default_value_t = 10)]
        inits: usize,
    },
}

impl Command {
    fn input(&self) -> &Input {
        match self {
            Self::Solve { input, .. }
            | Self::Kappa { input, .. }
            | Self::Unique { input, .. }
            | Self::Predict { input, .. }
            | Self::Oracle { input, .. }
            | Self::Probe { input, .. } => input,
            Self::Reveal(input) | Self::Certify(input) | Self::Invert(input) | Self::Blackwell(input) => input,
        }
    }
}

fn read_input(path: &PathBuf) -> Result<String> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(io)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

/// Runs one command and returns the text to emit (JSON or CSV, with a
/// trailing newline).
pub fn run(cli: &Cli) -> Result<String> {
    let text = read_input(&cli.command.input().problem)?;
    let problem = Problem::new(ProblemFile::parse(&text, cli.strict)?)?;
    let out = match &cli.command {
        Command::Solve { csv, .. } => {
            let (menu, spec, opts) = (problem.menu()?, problem.cost()?, problem.solve_options());
            let sol = solve(&menu, &problem.prior, &spec, &opts)?;
            if *csv {
                return Ok(scr_csv(&problem, &sol.scr));
            }
            json!({
                "actions": menu.actions(),
                "states": problem.prior.states(),
                "scr": sol.scr.probs(),
                "value": sol.value,
                "iterations": sol.iterations,
                "residual": sol.residual,
                "method": sol.method.as_str(),
                "derivative_weight": sol.derivative_weight,
            })
        }
        Command::Reveal(_) => {
            let labels = problem.labels()?;
            let r = reveal(&problem.scr()?, &problem.prior)?;
            json!({
                "actions": r.actions().iter().map(|&a| &labels[a]).collect::<Vec<_>>(),
                "marginals": r.marginals(),
                "posteriors": r.posteriors().iter().map(Belief::weights).collect::<Vec<_>>(),
                "excluded": r.excluded().iter().map(|&a| &labels[a]).collect::<Vec<_>>(),
            })
        }
        Command::Kappa { grid: Some(n), .. } => return kappa_grid(&problem, *n),
        Command::Kappa { grid: None, .. } => {
            json!({ "kappa": kappa(&problem.cost()?, &problem.scr()?, &problem.prior)? })
        }
        Command::Certify(_) => {
            let tol = problem.file.options.tol.unwrap_or(DEFAULT_TOL);
            let c = inverse::certify(&problem.scr()?, &problem.menu()?, &problem.prior, &problem.cost()?, tol)?;
            json!({
                "verdict": c.verdict.as_str(),
                "residual": c.residual,
                "lambda": c.lambda,
                "gamma": c.gamma,
                "entry": c.entry,
                "reason": c.reason,
            })
        }
        Command::Invert(_) => {
            let labels = problem.labels()?;
            let scr = problem.scr()?;
            let menu = inverse::rationalize(&scr, &problem.prior, &problem.cost()?).at("$.scr")?;
            let unused: Vec<&String> = (0..scr.n_actions()).filter(|a| !scr.support().contains(a)).map(|a| &labels[a]).collect();
            json!({
                "actions": labels,
                "states": problem.prior.states(),
                "utilities": menu.utilities(),
                "unused": unused,
            })
        }
        Command::Unique { equivalent, .. } => {
            let scr = problem.scr()?;
            let r = inverse::unique_check(&scr, &problem.prior)?;
            let mut out = json!({
                "unique_capable": r.unique_capable,
                "rank": r.rank,
                "n_actions": r.n_actions,
                "singular_values": r.singular_values,
                "threshold": r.threshold,
            });
            if *equivalent {
                let found = inverse::find_equivalent(&scr, &problem.menu()?, &problem.prior, &problem.cost()?)?;
                out["equivalent"] = match found {
                    Some(e) => json!({ "scr": e.scr.probs(), "value": e.value, "value_gap": e.value_gap }),
                    None => Value::Null,
                };
            }
            out
        }
        Command::Predict { submenus, .. } => {
            let (menu, spec, opts) = (problem.menu()?, problem.cost()?, problem.solve_options());
            let list = parse_submenus(submenus, menu.actions())?;
            let scr = match problem.file.scr {
                Some(_) => problem.scr()?,
                None => solve(&menu, &problem.prior, &spec, &opts)?.scr,
            };
            let forecast = predict_submenus(&scr, &menu, &problem.prior, &spec, list.as_deref(), &opts)?;
            let predictions: Vec<Value> = forecast
                .predictions
                .iter()
                .map(|p| {
                    json!({
                        "submenu": p.actions,
                        "scr": p.scr.probs(),
                        "value": p.value,
                        "unique": p.unique,
                        "verdict": p.verdict.as_str(),
                        "residual": p.residual,
                    })
                })
                .collect();
            json!({ "grand_scr": scr.probs(), "predictions": predictions })
        }
        Command::Blackwell(_) => {
            let policies = problem.policies()?;
            let v = blackwell_geq(&policies[0], &policies[1])?;
            json!({
                "more_informative": v.more_informative,
                "witness": v.witness,
                "certificate": v.certificate,
                "residual": v.residual,
            })
        }
        Command::Oracle { grid, csv, .. } => {
            let resolution = grid.or(problem.file.options.grid_resolution);
            let r = grid_oracle(&problem.menu()?, &problem.prior, &problem.cost()?, resolution)?;
            if *csv {
                return Ok(scr_csv(&problem, &r.scr));
            }
            json!({
                "value": r.value,
                "beliefs": r.beliefs.iter().map(Belief::weights).collect::<Vec<_>>(),
                "weights": r.weights,
                "scr": r.scr.probs(),
                "resolution": r.resolution,
            })
        }
        Command::Probe { seed, samples, inits, .. } => {
            let seed = seed.or(problem.file.options.seed).unwrap_or(0);
            let r = uniqueness_probe(
                &problem.prior,
                &problem.cost()?,
                problem.n_actions()?,
                *samples,
                *inits,
                seed,
                &problem.solve_options(),
            )?;
            json!({
                "instances": r.instances,
                "initializations": r.initializations,
                "spreads": r.spreads,
                "max_spread": r.max_spread,
                "failures": r.failures,
                "seed": r.seed,
            })
        }
    };
    Ok(crate::json::to_string(&out) + "\n")
}

/// `None` for `all`; otherwise label lists resolved to action indices.
fn parse_submenus(spec: &str, labels: &[String]) -> Result<Option<Vec<Vec<usize>>>> {
    if spec.trim() == "all" {
        return Ok(None);
    }
    spec.split(';')
        .map(|group| {
            group
                .split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| {
                    labels
                        .iter()
                        .position(|x| x == l)
                        .ok_or_else(|| CliError::schema("--submenus", format!("unknown action label {l:?}")))
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<usize>>>>()
        .map(Some)
}

fn scr_csv(problem: &Problem, scr: &Scr) -> String {
    let mut out = problem.prior.states().join(",") + "\n";
    for row in scr.probs() {
        let cells: Vec<String> = row.iter().map(|&x| crate::json::format_f64(x)).collect();
        out += &(cells.join(",") + "\n");
    }
    out
}

/// κ of the binary SCR with `s_1 = (g_i, g_j)`, `g = 0, 1/(N−1), …, 1`.
fn kappa_grid(problem: &Problem, n: usize) -> Result<String> {
    let states = problem.prior.states();
    if states.len() != 2 {
        return Err(CliError::schema("$.states", "--grid needs exactly two states"));
    }
    if n < 2 {
        return Err(CliError::schema("--grid", "N must be at least 2"));
    }
    let spec = problem.cost()?;
    let mut out = format!("s1_{},s1_{},kappa\n", states[0], states[1]);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
            let scr = Scr::new(vec![vec![1.0 - x, 1.0 - y], vec![x, y]])?;
            let k = kappa(&spec, &scr, &problem.prior)?;
            out += &format!("{},{},{}\n", crate::json::format_f64(x), crate::json::format_f64(y), crate::json::format_f64(k));
        }
    }
    Ok(out)
}
