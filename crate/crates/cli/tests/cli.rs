use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::Value;
use tempfile::TempDir;
use vanish::discrete::parse_sweep_csv;
use vanish::grid::Domain;
use vanish::{Grid, GridFunction};

fn vanish(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanish"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn vanish_env(dir: &Path, args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanish"))
        .current_dir(dir)
        .env(key, val)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Exit code and parsed stderr report of a failing run.
fn failed(out: &Output) -> (i32, Value) {
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    (out.status.code().unwrap(), err)
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn single_state(dir: &Path, c: f64) {
    fs::write(
        dir.join("c.json"),
        format!(r#"{{"n_states":1,"actions":[[{{"cost":{c},"row":[[0,1.0]]}}]]}}"#),
    )
    .unwrap();
}

fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read_to_string(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn mdp_solve_single_state() {
    let tmp = TempDir::new().unwrap();
    single_state(tmp.path(), 1.5);
    let v = ok(&vanish(
        tmp.path(),
        &["mdp", "solve", "c.json", "--alpha", "0.5", "--out", "o"],
    ));
    assert!((v["v_alpha"][0].as_f64().unwrap() - 3.0).abs() < 1e-9);
    let file = read_json(tmp.path().join("o/solution.json"));
    assert_eq!(file, v);
    let manifest = read_json(tmp.path().join("o/manifest.json"));
    assert_eq!(manifest["command"], "mdp solve");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config"]["command"]["alpha"], 0.5);
    assert!(manifest["config"]["tolerances"]["max_iter"].is_u64());
    assert!(manifest["versions"]["vanish"].is_string());
}

#[test]
fn mdp_solve_builtin_operator() {
    let tmp = TempDir::new().unwrap();
    let v = ok(&vanish(
        tmp.path(),
        &["mdp", "solve", "--operator", "max_polyhedral", "--alpha", "0.1"],
    ));
    assert_eq!(v["v_alpha"].as_array().unwrap().len(), 2);
    assert!(tmp.path().join("out/solution.json").exists());
}

#[test]
fn gainbias_oracle_and_sweep_agree() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for seed in 0..6 {
        let seed = seed.to_string();
        ok(&vanish(
            d,
            &["mdp", "random", "--seed", &seed, "--states", "5", "--out", "m"],
        ));
        let gb = ok(&vanish(d, &["mdp", "gainbias", "m/model.json", "--out", "g"]));
        assert_eq!(gb["certificates"]["subinvariant"], true);
        assert_eq!(gb["certificates"]["pump"], true);
        let oracle = ok(&vanish(d, &["mdp", "oracle", "m/model.json", "--out", "o"]));
        let eta = gb["gain_bias"]["eta"].as_array().unwrap();
        for (a, b) in eta.iter().zip(oracle["eta"].as_array().unwrap()) {
            assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-9);
        }
        let sweep = ok(&vanish(
            d,
            &[
                "mdp",
                "sweep",
                "m/model.json",
                "--alphas",
                "0.5,0.1,0.01,0.001",
                "--out",
                "s",
            ],
        ));
        assert_eq!(sweep["verdict"], "PASS");
        let text = fs::read_to_string(d.join("s/sweep.csv")).unwrap();
        let records = parse_sweep_csv(&text).unwrap();
        assert_eq!(records.len(), 4 * 5);
        for r in &records {
            assert!((r.alpha_v_alpha - r.eta_ref).abs() - r.deviation <= 1e-12);
        }
    }
}

#[test]
fn sweep_csv_round_trips() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(&vanish(d, &["mdp", "random", "--seed", "3", "--out", "m"]));
    ok(&vanish(
        d,
        &["mdp", "sweep", "m/model.json", "--alphas", "0.3,0.03", "--out", "s"],
    ));
    let text = fs::read_to_string(d.join("s/sweep.csv")).unwrap();
    let records = parse_sweep_csv(&text).unwrap();
    let mut again = String::from(vanish::discrete::CSV_HEADER);
    again.push('\n');
    for r in &records {
        again.push_str(&format!(
            "{},{},{},{},{}\n",
            r.alpha, r.state, r.alpha_v_alpha, r.eta_ref, r.deviation
        ));
    }
    assert_eq!(again, text);
}

#[test]
fn hjb_solve_decay_closed_form() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let s = ok(&vanish(
        d,
        &[
            "hjb", "solve", "--system", "decay_1d", "--lambda", "0.01", "--h", "0.002", "--out", "o",
        ],
    ));
    assert_eq!(s["within_bounds"], true);
    let meta = read_json(d.join("o/metadata.json"));
    assert_eq!(meta["lambda"], 0.01);
    assert_eq!(meta["h"], 0.002);
    let text = fs::read_to_string(d.join("o/value.csv")).unwrap();
    let grid = Arc::new(Grid::for_domain(&Domain::cube(1, 0.0, 1.0), 0.002).unwrap());
    let v = GridFunction::from_csv(grid.clone(), &text).unwrap();
    assert_eq!(v.to_csv(), text);
    let last = grid.locate(&[1.0]).unwrap();
    assert!((0.01 * v.values()[last] - 0.95).abs() < 1e-3);
}

#[test]
fn hjb_sweep_writes_per_lambda_csvs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let s = ok(&vanish(
        d,
        &[
            "hjb",
            "sweep",
            "--system",
            "reach_1d",
            "--h",
            "0.02",
            "--lambdas",
            "0.1,0.03,0.01",
            "--out",
            "o",
            "--plot-script",
        ],
    ));
    assert_eq!(s["rows"].as_array().unwrap().len(), 3);
    for l in ["0.1", "0.03", "0.01"] {
        assert!(d.join(format!("o/rescaled_lambda_{l}.csv")).exists());
    }
    let limit = fs::read_to_string(d.join("o/limit.csv")).unwrap();
    assert_eq!(limit, fs::read_to_string(d.join("o/rescaled_lambda_0.01.csv")).unwrap());
    let plot = fs::read_to_string(d.join("o/plot.gp")).unwrap();
    assert!(plot.contains("'limit.csv'"));
    let manifest = read_json(d.join("o/manifest.json"));
    assert!(manifest["artifacts"].as_array().unwrap().iter().any(|a| a == "plot.gp"));
}

#[test]
fn hjb_check_s_on_rotation_pair() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(&vanish(d, &["hjb", "rotation-pair", "--h", "0.02", "--out", "p"]));
    let r = ok(&vanish(
        d,
        &[
            "hjb",
            "check-s",
            "--system",
            "rotation_2d",
            "--u",
            "p/u.csv",
            "--w",
            "p/w.csv",
            "--max-residual",
            "0.2",
            "--out",
            "c",
        ],
    ));
    assert_eq!(r["h"], 0.02);
    for k in ["res1", "res2", "res3"] {
        assert!(r[k].as_f64().unwrap() <= 0.2, "{r}");
    }
    assert_eq!(r, read_json(d.join("c/residuals.json")));
    // u in place of w is not a solution
    let out = vanish(
        d,
        &[
            "hjb",
            "check-s",
            "--system",
            "rotation_2d",
            "--u",
            "p/u.csv",
            "--w",
            "p/u.csv",
            "--max-residual",
            "0.2",
            "--out",
            "c2",
        ],
    );
    let (code, err) = failed(&out);
    assert_eq!(code, 3);
    assert_eq!(err["error"], "check_failed");
    assert_eq!(read_json(d.join("c2/manifest.json"))["status"], "check_failed");
}

#[test]
fn hjb_reach_fixture() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(&vanish(
        d,
        &["hjb", "reach", "--system", "reach_1d", "--h", "0.05", "--out", "r"],
    ));
    let text = fs::read_to_string(d.join("r/reach.csv")).unwrap();
    let grid = Arc::new(Grid::for_domain(&Domain::cube(1, -1.0, 1.0), 0.05).unwrap());
    let values = GridFunction::from_csv(grid.clone(), &text).unwrap();
    for i in 0..grid.len() {
        let x = grid.coord(i, 0);
        let expected = if x.abs() >= 1.0 { 1.0 } else { 0.0 };
        assert_eq!(values.values()[i], expected);
    }
}

#[test]
fn input_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    single_state(d, 1.0);
    let cases: [&[&str]; 6] = [
        &["mdp", "sweep", "c.json", "--alphas", "0.1,0.5"],
        &["mdp", "sweep", "c.json", "--alphas", "0.5,-0.1"],
        &["mdp", "solve", "missing.json", "--alpha", "0.5"],
        &["mdp", "solve", "c.json", "--alpha", "1.5"],
        &["hjb", "solve", "--system", "decay_1d", "--lambda", "0.1", "--h", "0.2"],
        &["hjb", "solve", "--system", "no_such", "--lambda", "0.1", "--h", "0.01"],
    ];
    for args in cases {
        let (code, err) = failed(&vanish(d, args));
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(err["message"].is_string());
    }
    let (code, _) = failed(&vanish_env(
        d,
        &["mdp", "solve", "c.json", "--alpha", "0.5"],
        "VANISH_THREADS",
        "zero",
    ));
    assert_eq!(code, 1);
}

#[test]
fn non_convergence_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = vanish(
        tmp.path(),
        &[
            "hjb",
            "solve",
            "--system",
            "rotation_2d",
            "--lambda",
            "0.01",
            "--h",
            "0.1",
            "--max-iter",
            "3",
        ],
    );
    let (code, err) = failed(&out);
    assert_eq!(code, 2);
    assert_eq!(err["error"], "not_converged");
    assert_eq!(
        read_json(tmp.path().join("out/manifest.json"))["status"],
        "not_converged"
    );
}

#[test]
fn config_file_with_flag_override() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    single_state(d, 2.0);
    fs::write(
        d.join("run.json"),
        r#"{"command": "mdp solve", "model": "c.json", "alpha": 0.5, "out": "from_file"}"#,
    )
    .unwrap();
    let v = ok(&vanish(d, &["run", "run.json"]));
    assert!((v["v_alpha"][0].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert!(d.join("from_file/solution.json").exists());

    let v = ok(&vanish(
        d,
        &[
            "mdp",
            "solve",
            "--config",
            "run.json",
            "--alpha",
            "0.25",
            "--out",
            "from_flags",
        ],
    ));
    assert!((v["v_alpha"][0].as_f64().unwrap() - 8.0).abs() < 1e-8);
    let m = read_json(d.join("from_flags/manifest.json"));
    assert_eq!(m["config"]["command"]["alpha"], 0.25);

    let (code, _) = failed(&vanish(d, &["hjb", "solve", "--config", "run.json"]));
    assert_eq!(code, 1);
    fs::write(d.join("typo.json"), r#"{"alpah": 0.5}"#).unwrap();
    let (code, _) = failed(&vanish(d, &["mdp", "solve", "c.json", "--config", "typo.json"]));
    assert_eq!(code, 1);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(&vanish(
        d,
        &["mdp", "random", "--seed", "11", "--states", "6", "--out", "m"],
    ));
    let runs: [(&[&str], &str); 2] = [
        (&["mdp", "sweep", "m/model.json", "--alphas", "0.5,0.05,0.005"], "mdp"),
        (
            &[
                "hjb",
                "sweep",
                "--system",
                "rotation_2d",
                "--h",
                "0.1",
                "--lambdas",
                "0.2,0.1",
                "--parallel",
            ],
            "hjb",
        ),
    ];
    for (args, tag) in runs {
        let mut snaps = Vec::new();
        for (k, threads) in ["1", "4", "4"].into_iter().enumerate() {
            let out = format!("{tag}_{k}");
            let mut full = args.to_vec();
            full.extend(["--out", "o"]);
            ok(&vanish_env(d, &full, "VANISH_THREADS", threads));
            fs::rename(d.join("o"), d.join(&out)).unwrap();
            snaps.push(snapshot(&d.join(out)));
        }
        assert_eq!(snaps[0], snaps[1], "{tag}");
        assert_eq!(snaps[1], snaps[2], "{tag}");
    }
    ok(&vanish(
        d,
        &["mdp", "random", "--seed", "11", "--states", "6", "--out", "m2"],
    ));
    assert_eq!(
        fs::read(d.join("m/model.json")).unwrap(),
        fs::read(d.join("m2/model.json")).unwrap()
    );
}
