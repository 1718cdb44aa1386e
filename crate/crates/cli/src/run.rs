//! Command execution and artifact emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use vanish::control::BuiltinSystem;
use vanish::discrete::{
    alpha_sweep, enumerate_policies, pump_holds, solve_discounted, solve_gain_bias_with, GainBiasOptions, SweepOptions,
};
use vanish::hjb::{check_system_s, reachable_values, rescaled_sweep, solve_hjb, HjbOptions};
use vanish::operators::random::{random_mdp, RandomMdpSpec};
use vanish::operators::{builtin_operator, MdpModel, OperatorHandle};
use vanish::{Grid, GridFunction};

use crate::config::{system_grid, Command, ModelSource, RunConfig};
use crate::error::CliError;

/// Powers checked by the pump certificate.
const PUMP_STEPS: [usize; 4] = [1, 2, 5, 20];

/// A CSV worth plotting: file name, spatial dimension (0 for sweep tables).
struct PlotEntry {
    file: String,
    dim: usize,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    plots: Vec<PlotEntry>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            plots: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(vanish::Error::from)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn grid_csv(&mut self, name: &str, f: &GridFunction) -> Result<(), CliError> {
        self.write(name, &f.to_csv())?;
        self.plots.push(PlotEntry {
            file: name.to_string(),
            dim: f.grid().dim(),
        });
        Ok(())
    }
}

/// Result of a command: a summary for stdout and, if a check failed, why.
struct Report {
    summary: Value,
    failure: Option<String>,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Self { summary, failure: None }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    status: &'a str,
    config: &'a RunConfig,
    versions: Value,
    artifacts: &'a [String],
}

/// Executes `cfg`, writes its artifacts and manifest, and prints the summary.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = Outputs::new(&cfg.out)?;
    let result = dispatch(cfg, &mut out);
    if cfg.plot_script && !out.plots.is_empty() {
        let script = plot_script(&out.plots);
        out.write("plot.gp", &script)?;
    }
    let status = match &result {
        Ok(Report { failure: None, .. }) => "ok",
        Ok(Report { failure: Some(_), .. }) => "check_failed",
        Err(e) => e.kind(),
    };
    let mut artifacts = out.files.clone();
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        command: cfg.command.label(),
        status,
        config: cfg,
        versions: json!({
            "vanish": vanish::VERSION,
            "vanish-cli": env!("CARGO_PKG_VERSION"),
        }),
        artifacts: &artifacts,
    };
    out.json("manifest.json", &manifest)?;
    let report = result?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report.summary).map_err(vanish::Error::from)?
    );
    match report.failure {
        Some(msg) => Err(CliError::Check(msg)),
        None => Ok(()),
    }
}

fn dispatch(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, CliError> {
    match &cfg.command {
        Command::MdpSolve { source, alpha } => mdp_solve(cfg, out, source, *alpha),
        Command::MdpGainbias { model } => mdp_gainbias(cfg, out, model),
        Command::MdpSweep { model, alphas } => mdp_sweep(cfg, out, model, alphas),
        Command::MdpOracle { model } => mdp_oracle(out, model),
        Command::MdpRandom { states, max_actions } => mdp_random(cfg, out, *states, *max_actions),
        Command::HjbSolve {
            system,
            h,
            action_samples,
            lambda,
        } => hjb_solve(cfg, out, system, *h, *action_samples, *lambda),
        Command::HjbSweep {
            system,
            h,
            action_samples,
            lambdas,
            parallel,
        } => hjb_sweep(cfg, out, system, *h, *action_samples, lambdas, *parallel),
        Command::HjbCheckS {
            system,
            h,
            action_samples,
            u,
            w,
            max_residual,
        } => hjb_check_s(out, system, *h, *action_samples, u, w, *max_residual),
        Command::HjbReach {
            system,
            h,
            action_samples,
        } => hjb_reach(out, system, *h, *action_samples),
        Command::HjbRotationPair { h } => hjb_rotation_pair(out, *h),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_model(path: &Path) -> Result<MdpModel<f64>, CliError> {
    MdpModel::from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn sweep_options(cfg: &RunConfig, t: &OperatorHandle<f64>) -> SweepOptions<f64> {
    let mut opts = SweepOptions::for_operator(t);
    if let Some(tol) = cfg.tolerances.tol {
        opts.solve_tol = tol;
    }
    opts.max_iter = cfg.tolerances.max_iter;
    opts.bound_tol = cfg.tolerances.bound_tol;
    opts
}

fn mdp_solve(cfg: &RunConfig, out: &mut Outputs, source: &ModelSource, alpha: f64) -> Result<Report, CliError> {
    let t = match source {
        ModelSource::File(p) => OperatorHandle::from_mdp(load_model(p)?),
        ModelSource::Operator(name) => builtin_operator(name)?,
    };
    let opts = sweep_options(cfg, &t);
    let sol = solve_discounted(&t, alpha, opts.solve_tol, opts.max_iter)?;
    out.json("solution.json", &sol)?;
    Ok(Report::ok(serde_json::to_value(&sol).map_err(vanish::Error::from)?))
}

/// Gain–bias solution of `m` with its half-line classification and pump check.
fn certified_gain_bias(
    cfg: &RunConfig,
    m: &MdpModel<f64>,
    t: &OperatorHandle<f64>,
) -> Result<(vanish::GainBias, vanish::HalfLine, bool), CliError> {
    let mut opts = GainBiasOptions {
        argmin_tol: cfg.tolerances.argmin_tol,
        ..GainBiasOptions::default()
    };
    if let Some(tol) = cfg.tolerances.tol {
        opts.tol = tol;
    }
    let gb = solve_gain_bias_with(m, &opts)?;
    let cert_tol = cfg.tolerances.bound_tol * (1.0 + m.max_abs_cost());
    let half = gb.half_line(t, cert_tol)?;
    let pump = pump_holds(t, &half, &PUMP_STEPS, cert_tol)?;
    Ok((gb, half, pump))
}

fn mdp_gainbias(cfg: &RunConfig, out: &mut Outputs, model: &Path) -> Result<Report, CliError> {
    let m = load_model(model)?;
    let t = OperatorHandle::from_mdp(m.clone());
    let (gb, half, pump) = certified_gain_bias(cfg, &m, &t)?;
    let sub = half.kind.is_sub();
    let doc = json!({
        "gain_bias": gb,
        "certificates": {
            "half_line": half.kind,
            "subinvariant": sub,
            "pump": pump,
            "pump_steps": PUMP_STEPS,
        },
    });
    out.json("gain_bias.json", &doc)?;
    let failure =
        (!sub || !pump).then(|| format!("gain-bias certificate failed: half-line {:?}, pump {pump}", half.kind));
    Ok(Report { summary: doc, failure })
}

fn mdp_sweep(cfg: &RunConfig, out: &mut Outputs, model: &Path, alphas: &[f64]) -> Result<Report, CliError> {
    let m = load_model(model)?;
    let t = OperatorHandle::from_mdp(m.clone());
    let (_, half, _) = certified_gain_bias(cfg, &m, &t)?;
    let certified = half.kind.is_sub();
    let references = if certified { vec![half.clone()] } else { Vec::new() };
    let table = alpha_sweep(&t, alphas, &references, &sweep_options(cfg, &t))?;
    let verdict = certified && table.verdict();
    out.write("sweep.csv", &table.to_csv())?;
    out.plots.push(PlotEntry {
        file: "sweep.csv".into(),
        dim: 0,
    });
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "alpha": r.alpha,
                "deviation": r.deviation,
                "lower_bound_ok": r.lower_bound_ok,
                "conjugated_bound_ok": r.conjugated_bound_ok,
                "iterations": r.iterations,
            })
        })
        .collect();
    let doc = json!({
        "eta_ref": table.eta_ref,
        "reference_half_line": half.kind,
        "rows": rows,
        "verdict": if verdict { "PASS" } else { "FAIL" },
    });
    out.json("sweep.json", &doc)?;
    let failure = if !certified {
        Some(format!("no certified reference half-line ({:?})", half.kind))
    } else if !verdict {
        Some("comparison bound violated".into())
    } else {
        None
    };
    Ok(Report { summary: doc, failure })
}

fn mdp_oracle(out: &mut Outputs, model: &Path) -> Result<Report, CliError> {
    let m = load_model(model)?;
    let eta = enumerate_policies(&m)?;
    let doc = json!({
        "eta": eta,
        "policies": m.policy_count().to_string(),
    });
    out.json("oracle.json", &doc)?;
    Ok(Report::ok(doc))
}

fn mdp_random(cfg: &RunConfig, out: &mut Outputs, states: usize, max_actions: usize) -> Result<Report, CliError> {
    let spec = RandomMdpSpec {
        min_states: states,
        max_states: states,
        max_actions,
        ..RandomMdpSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = random_mdp::<f64, _>(&mut rng, &spec);
    let mut text = m.to_json()?;
    text.push('\n');
    out.write("model.json", &text)?;
    Ok(Report::ok(json!({
        "model": "model.json",
        "n_states": m.n_states(),
        "action_counts": m.action_counts(),
    })))
}

fn build_system(name: &str, samples: usize) -> Result<vanish::ControlSystem, CliError> {
    Ok(name.parse::<BuiltinSystem>()?.build_with(samples)?)
}

fn hjb_options(cfg: &RunConfig) -> HjbOptions<f64> {
    let mut opts = HjbOptions::new(cfg.tolerances.tol.expect("hjb tolerance is always set"));
    opts.max_sweeps = cfg.tolerances.max_iter;
    opts
}

fn hjb_solve(
    cfg: &RunConfig,
    out: &mut Outputs,
    system: &str,
    h: f64,
    samples: usize,
    lambda: f64,
) -> Result<Report, CliError> {
    let sys = build_system(system, samples)?;
    let grid = Arc::new(system_grid(system, h)?);
    let r = solve_hjb(&sys, grid, lambda, &hjb_options(cfg))?;
    out.grid_csv("value.csv", &r.value)?;
    out.json("metadata.json", &r.metadata())?;
    let doc = json!({
        "metadata": r.metadata(),
        "dt": r.dt,
        "error_bound": r.error_bound,
        "within_bounds": r.within_bounds,
        "projection_warnings": r.projection_warnings,
        "max_projection": r.max_projection,
    });
    let failure = (!r.within_bounds).then(|| "0 <= lambda V <= 1 violated".to_string());
    Ok(Report { summary: doc, failure })
}

fn hjb_sweep(
    cfg: &RunConfig,
    out: &mut Outputs,
    system: &str,
    h: f64,
    samples: usize,
    lambdas: &[f64],
    parallel: bool,
) -> Result<Report, CliError> {
    let sys = build_system(system, samples)?;
    let grid = Arc::new(system_grid(system, h)?);
    let sweep = rescaled_sweep(&sys, grid, lambdas, &hjb_options(cfg), parallel)?;
    let mut rows = Vec::new();
    let mut prev: Option<GridFunction> = None;
    for s in &sweep.solves {
        let file = format!("rescaled_lambda_{}.csv", s.lambda);
        let lv = s.rescaled();
        out.grid_csv(&file, &lv)?;
        let gap = prev.as_ref().map(|p| p.dist(&lv)).transpose()?;
        rows.push(json!({
            "file": file,
            "metadata": s.metadata(),
            "error_bound": s.error_bound,
            "within_bounds": s.within_bounds,
            "gap_to_previous": gap,
        }));
        prev = Some(lv);
    }
    out.grid_csv("limit.csv", &sweep.limit())?;
    let in_bounds = sweep.solves.iter().all(|s| s.within_bounds);
    let doc = json!({
        "rows": rows,
        "limit": "limit.csv",
        "reduced_residual": sweep.reduced_residual,
    });
    out.json("sweep.json", &doc)?;
    let failure = (!in_bounds).then(|| "0 <= lambda V <= 1 violated".to_string());
    Ok(Report { summary: doc, failure })
}

/// Grid step of a grid-function CSV: the spread of its first coordinate over
/// the number of distinct values minus one, rounded to 12 significant digits.
fn infer_h(text: &str) -> Result<f64, CliError> {
    let mut xs: Vec<f64> = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let field = line.split(',').next().unwrap_or_default().trim();
        xs.push(field.parse().map_err(|e| CliError::Input(format!("{field}: {e}")))?);
    }
    xs.sort_by(f64::total_cmp);
    let (lo, hi) = match (xs.first(), xs.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => (lo, hi),
        _ => return Err(CliError::Input("cannot infer h from csv; pass --h".into())),
    };
    let tol = 1e-9 * (hi - lo);
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let h = (hi - lo) / (xs.len() - 1) as f64;
    format!("{h:.11e}")
        .parse()
        .map_err(|_| CliError::Input("cannot infer h".into()))
}

fn hjb_check_s(
    out: &mut Outputs,
    system: &str,
    h: Option<f64>,
    samples: usize,
    u_path: &Path,
    w_path: &Path,
    max_residual: Option<f64>,
) -> Result<Report, CliError> {
    let sys = build_system(system, samples)?;
    let (u_text, w_text) = (read(u_path)?, read(w_path)?);
    let h = match h {
        Some(h) => h,
        None => infer_h(&u_text)?,
    };
    let grid = Arc::new(system_grid(system, h)?);
    let load = |text: &str, path: &Path| {
        GridFunction::from_csv(grid.clone(), text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    };
    let u = load(&u_text, u_path)?;
    let w = load(&w_text, w_path)?;
    let res = check_system_s(&sys, &u, &w)?;
    let doc = json!({
        "system": system,
        "h": h,
        "res1": res.res1,
        "res2": res.res2,
        "res3": res.res3,
        "max": res.max(),
    });
    out.json("residuals.json", &doc)?;
    let failure = max_residual
        .filter(|&m| res.max().is_nan() || res.max() > m)
        .map(|m| format!("residual {} exceeds {m}", res.max()));
    Ok(Report { summary: doc, failure })
}

fn hjb_reach(out: &mut Outputs, system: &str, h: f64, samples: usize) -> Result<Report, CliError> {
    let sys = build_system(system, samples)?;
    let grid: Arc<Grid> = Arc::new(system_grid(system, h)?);
    let values = reachable_values(&sys, grid)?;
    out.grid_csv("reach.csv", &values)?;
    let v = values.values();
    Ok(Report::ok(json!({
        "file": "reach.csv",
        "nodes": v.len(),
        "min": v.iter().copied().fold(f64::INFINITY, f64::min),
        "max": v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })))
}

fn hjb_rotation_pair(out: &mut Outputs, h: f64) -> Result<Report, CliError> {
    let sys = build_system("rotation_2d", 2)?;
    let grid = Arc::new(system_grid("rotation_2d", h)?);
    let (u, w) = vanish::control::rotation_pair(&sys, grid)?;
    out.grid_csv("u.csv", &u)?;
    out.grid_csv("w.csv", &w)?;
    Ok(Report::ok(json!({ "u": "u.csv", "w": "w.csv", "h": h })))
}

/// Gnuplot script plotting every listed CSV.
fn plot_script(entries: &[PlotEntry]) -> String {
    let mut s = String::from("# gnuplot -p plot.gp\nset datafile separator ','\nset key autotitle columnhead\n");
    for e in entries {
        let _ = match e.dim {
            0 => writeln!(
                s,
                "set logscale x\nset xlabel 'alpha'\nplot '{0}' using 1:5 with points title '{0}'\nunset logscale x",
                e.file
            ),
            1 => writeln!(s, "plot '{0}' using 1:2 with lines title '{0}'", e.file),
            2 => writeln!(s, "splot '{0}' using 1:2:3 with points title '{0}'", e.file),
            d => {
                let _ = writeln!(s, "# {}: {d}-dimensional, not plotted", e.file);
                continue;
            }
        };
        s.push_str("pause -1\n");
    }
    s
}
