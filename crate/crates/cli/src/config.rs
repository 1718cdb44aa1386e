//! Run configuration: JSON config file merged with command-line flags, then
//! validated into a typed [`RunConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vanish::control::{BuiltinSystem, DEFAULT_ACTION_SAMPLES};
use vanish::operators::DEFAULT_ARGMIN_TOL;
use vanish::Grid;

use crate::error::CliError;

/// Fewest grid nodes accepted along any axis.
pub const MIN_NODES_PER_AXIS: usize = 8;

pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_MDP_MAX_ITER: usize = 1_000_000;
pub const DEFAULT_HJB_TOL: f64 = 1e-8;
pub const DEFAULT_HJB_MAX_SWEEPS: usize = 200_000;
pub const DEFAULT_BOUND_TOL: f64 = 1e-8;

/// Every recognized key of a config file. All optional; which are required
/// depends on the command.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub command: Option<String>,
    pub model: Option<PathBuf>,
    pub operator: Option<String>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub argmin_tol: Option<f64>,
    pub states: Option<usize>,
    pub max_actions: Option<usize>,
    pub system: Option<String>,
    pub h: Option<f64>,
    pub action_samples: Option<usize>,
    pub lambda: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub parallel: Option<bool>,
    pub u: Option<PathBuf>,
    pub w: Option<PathBuf>,
    pub max_residual: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub plot_script: Option<bool>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Overlays serialized flags on `self`; flags win.
    pub fn overlay(self, flags: &impl Serialize) -> Result<Self, CliError> {
        let mut base = match serde_json::to_value(self).expect("settings serialize") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        base.retain(|_, v| !v.is_null());
        let top: Map<String, Value> = match serde_json::to_value(flags).expect("flags serialize") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        base.extend(top);
        serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Input(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    File(PathBuf),
    Operator(String),
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    MdpSolve {
        source: ModelSource,
        alpha: f64,
    },
    MdpGainbias {
        model: PathBuf,
    },
    MdpSweep {
        model: PathBuf,
        alphas: Vec<f64>,
    },
    MdpOracle {
        model: PathBuf,
    },
    MdpRandom {
        states: usize,
        max_actions: usize,
    },
    HjbSolve {
        system: String,
        h: f64,
        action_samples: usize,
        lambda: f64,
    },
    HjbSweep {
        system: String,
        h: f64,
        action_samples: usize,
        lambdas: Vec<f64>,
        parallel: bool,
    },
    HjbCheckS {
        system: String,
        h: Option<f64>,
        action_samples: usize,
        u: PathBuf,
        w: PathBuf,
        max_residual: Option<f64>,
    },
    HjbReach {
        system: String,
        h: f64,
        action_samples: usize,
    },
    HjbRotationPair {
        h: f64,
    },
}

impl Command {
    /// The command as typed on the command line.
    pub fn label(&self) -> &'static str {
        match self {
            Command::MdpSolve { .. } => "mdp solve",
            Command::MdpGainbias { .. } => "mdp gainbias",
            Command::MdpSweep { .. } => "mdp sweep",
            Command::MdpOracle { .. } => "mdp oracle",
            Command::MdpRandom { .. } => "mdp random",
            Command::HjbSolve { .. } => "hjb solve",
            Command::HjbSweep { .. } => "hjb sweep",
            Command::HjbCheckS { .. } => "hjb check-s",
            Command::HjbReach { .. } => "hjb reach",
            Command::HjbRotationPair { .. } => "hjb rotation-pair",
        }
    }
}

/// Tolerances in effect for a run. `None` means the library default, which
/// may depend on the model.
#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub argmin_tol: f64,
    pub bound_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,
    pub plot_script: bool,
    pub tolerances: Tolerances,
}

fn need<T>(v: Option<T>, key: &str, cmd: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("{cmd} requires `{key}`")))
}

fn positive(x: f64, key: &str) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Input(format!("{key} must be positive and finite, got {x}")))
    }
}

/// Nonempty, positive, strictly decreasing.
pub fn check_sweep_list(xs: &[f64], key: &str) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(CliError::Input(format!("{key} is empty")));
    }
    for &x in xs {
        positive(x, key)?;
    }
    if xs.windows(2).any(|w| w[0] <= w[1]) {
        return Err(CliError::Input(format!("{key} must be strictly decreasing")));
    }
    Ok(())
}

fn check_discount(a: f64, key: &str) -> Result<(), CliError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("{key} must lie in (0, 1), got {a}")))
    }
}

fn system_name(s: Option<String>, cmd: &str) -> Result<String, CliError> {
    let name = need(s, "system", cmd)?;
    name.parse::<BuiltinSystem>()?;
    Ok(name)
}

/// Builds the grid of `system` at step `h` and checks the node count per axis.
pub fn system_grid(system: &str, h: f64) -> Result<Grid, CliError> {
    positive(h, "h")?;
    let sys = system.parse::<BuiltinSystem>()?.build::<f64>()?;
    let grid = Grid::for_domain(sys.domain(), h)?;
    if let Some(&n) = grid.counts().iter().min() {
        if n < MIN_NODES_PER_AXIS {
            return Err(CliError::Input(format!(
                "h = {h} gives {n} nodes on some axis; at least {MIN_NODES_PER_AXIS} are required"
            )));
        }
    }
    Ok(grid)
}

impl RunConfig {
    /// Validates merged settings for the command `label` (for example `"hjb solve"`).
    pub fn resolve(label: &str, s: Settings) -> Result<Self, CliError> {
        if let Some(c) = &s.command {
            if c != label {
                return Err(CliError::Input(format!(
                    "config names command `{c}`, but `{label}` was invoked"
                )));
            }
        }
        let samples = s.action_samples.unwrap_or(DEFAULT_ACTION_SAMPLES);
        if samples < 2 {
            return Err(CliError::Input("action_samples must be at least 2".into()));
        }
        let hjb = label.starts_with("hjb");
        let command = match label {
            "mdp solve" => {
                let source = match (s.model, s.operator) {
                    (Some(_), Some(_)) => return Err(CliError::Input("give either a model or an operator".into())),
                    (Some(m), None) => ModelSource::File(m),
                    (None, Some(o)) => {
                        o.parse::<vanish::operators::BuiltinOperator>()?;
                        ModelSource::Operator(o)
                    }
                    (None, None) => return Err(CliError::Input("mdp solve requires `model` or `operator`".into())),
                };
                let alpha = need(s.alpha, "alpha", label)?;
                check_discount(alpha, "alpha")?;
                Command::MdpSolve { source, alpha }
            }
            "mdp gainbias" => Command::MdpGainbias {
                model: need(s.model, "model", label)?,
            },
            "mdp sweep" => {
                let alphas = need(s.alphas, "alphas", label)?;
                check_sweep_list(&alphas, "alphas")?;
                for &a in &alphas {
                    check_discount(a, "alphas")?;
                }
                Command::MdpSweep {
                    model: need(s.model, "model", label)?,
                    alphas,
                }
            }
            "mdp oracle" => Command::MdpOracle {
                model: need(s.model, "model", label)?,
            },
            "mdp random" => {
                let states = s.states.unwrap_or(4);
                let max_actions = s.max_actions.unwrap_or(3);
                if states == 0 || max_actions == 0 {
                    return Err(CliError::Input("states and max_actions must be positive".into()));
                }
                Command::MdpRandom { states, max_actions }
            }
            "hjb solve" => {
                let system = system_name(s.system, label)?;
                let h = need(s.h, "h", label)?;
                system_grid(&system, h)?;
                Command::HjbSolve {
                    system,
                    h,
                    action_samples: samples,
                    lambda: positive(need(s.lambda, "lambda", label)?, "lambda")?,
                }
            }
            "hjb sweep" => {
                let system = system_name(s.system, label)?;
                let h = need(s.h, "h", label)?;
                system_grid(&system, h)?;
                let lambdas = need(s.lambdas, "lambdas", label)?;
                check_sweep_list(&lambdas, "lambdas")?;
                Command::HjbSweep {
                    system,
                    h,
                    action_samples: samples,
                    lambdas,
                    parallel: s.parallel.unwrap_or(false),
                }
            }
            "hjb check-s" => {
                let system = system_name(s.system, label)?;
                if let Some(h) = s.h {
                    system_grid(&system, h)?;
                }
                Command::HjbCheckS {
                    system,
                    h: s.h,
                    action_samples: samples,
                    u: need(s.u, "u", label)?,
                    w: need(s.w, "w", label)?,
                    max_residual: s.max_residual.map(|r| positive(r, "max_residual")).transpose()?,
                }
            }
            "hjb reach" => {
                let system = system_name(s.system, label)?;
                let h = need(s.h, "h", label)?;
                system_grid(&system, h)?;
                Command::HjbReach {
                    system,
                    h,
                    action_samples: samples,
                }
            }
            "hjb rotation-pair" => {
                let h = need(s.h, "h", label)?;
                system_grid("rotation_2d", h)?;
                Command::HjbRotationPair { h }
            }
            other => return Err(CliError::Input(format!("unknown command `{other}`"))),
        };
        let tol = s.tol.map(|t| positive(t, "tol")).transpose()?;
        let argmin_tol = positive(s.argmin_tol.unwrap_or(DEFAULT_ARGMIN_TOL), "argmin_tol")?;
        let tolerances = Tolerances {
            tol: tol.or(hjb.then_some(DEFAULT_HJB_TOL)),
            max_iter: s.max_iter.unwrap_or(if hjb {
                DEFAULT_HJB_MAX_SWEEPS
            } else {
                DEFAULT_MDP_MAX_ITER
            }),
            argmin_tol,
            bound_tol: DEFAULT_BOUND_TOL,
        };
        if tolerances.max_iter == 0 {
            return Err(CliError::Input("max_iter must be positive".into()));
        }
        Ok(RunConfig {
            command,
            out: s.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            seed: s.seed.unwrap_or(0),
            plot_script: s.plot_script.unwrap_or(false),
            tolerances,
        })
    }
}
