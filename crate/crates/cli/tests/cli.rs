use std::path::Path;
use std::process::{Command, Output};

fn walktail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walktail"))
        .args(args)
        .env("WALKTAIL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TWO_POINT: &str = "twopoint:q=0.25,up=1,down=1";
const PARETO: &str = "paretoshift:alpha=3,scale=1,shift=3";

#[test]
fn usage_errors_exit_one() {
    assert_eq!(walktail(&["expand", "--order", "0"]).status.code(), Some(1));
    assert_eq!(walktail(&["expand", "--bogus"]).status.code(), Some(1));
    assert_eq!(walktail(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(walktail(&["evaluate", "--step", "nonsense:a=1"]).status.code(), Some(1));
    assert_eq!(walktail(&["--help"]).status.code(), Some(0));
}

#[test]
fn order_at_tail_index_is_refused() {
    let o = walktail(&["evaluate", "--step", PARETO, "--order", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("min(alpha"), "{}", stderr(&o));
}

#[test]
fn strict_mode_requires_seed() {
    let o = walktail(&["--strict", "moments", "--step", TWO_POINT, "--reps", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
    let o = walktail(&["--strict", "moments", "--step", TWO_POINT, "--reps", "1000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn csv_outputs_carry_schema_and_uncertainty() {
    let o = walktail(&["oracle", "--step", TWO_POINT, "--xmax", "5"]);
    let text = stdout(&o);
    let mut lines = text.lines().filter(|l| !l.starts_with('#') || l.starts_with("# walktail"));
    assert_eq!(lines.next(), Some("# walktail-schema v1"));
    assert_eq!(lines.next(), Some("x,Wbar_lower,Wbar_upper"));
    let row: Vec<f64> = lines.nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // P{M > 2} = 1/27
    assert!(row[1] <= 1.0 / 27.0 && 1.0 / 27.0 <= row[2]);
    assert!(row[2] - row[1] < 1e-10);

    let o = walktail(&[
        "ruin", "--claims", "pareto:alpha=3", "--interarrival", "exp:mean=1", "--premium", "2.5",
        "--xgrid", "20:40:3", "--reps", "2000", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let header = stdout(&o).lines().find(|l| l.starts_with('x')).unwrap().to_string();
    assert_eq!(header, "x,psi_expansion,psi_expansion_se,term_0,term_1,psi_mc,mc_se,censoring");
}

#[test]
fn randomized_output_is_byte_identical_across_runs_and_threads() {
    let args = [
        "ruin", "--claims", "pareto:alpha=3", "--interarrival", "det:t=1", "--premium", "2.5", "--xgrid",
        "5:20:4", "--reps", "3000", "--seed", "11",
    ];
    let a = walktail(&args);
    let b = walktail(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_walktail"))
        .args(args)
        .env("WALKTAIL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn moments_file_feeds_expand_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ms.json");
    let p = path.to_str().unwrap();
    let o = walktail(&["moments", "--step", PARETO, "--source", "lattice", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["schema"], "walktail-schema v1");
    assert!(json["diagnostics"]["wiener_hopf_residual"].as_f64().unwrap() < 1e-10);

    let o = walktail(&["expand", "--order", "2", "--moments", p]);
    let text = stdout(&o);
    let c0: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("D^-1: "))
        .unwrap()
        .parse()
        .unwrap();
    let ms = &json["moments"];
    let q = 1.0 - ms["p"].as_f64().unwrap();
    let mu1 = ms["mu_minus"][1].as_f64().unwrap();
    assert!((c0 - 1.0 / (q * mu1)).abs() < 1e-12 * c0.abs());

    let from_file = walktail(&["evaluate", "--step", PARETO, "--moments", p, "--xgrid", "50:50:1"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    let row = stdout(&from_file).lines().last().unwrap().to_string();
    let cells: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(cells.len(), 5);
    assert!((cells[1] + cells[2] - cells[3]).abs() < 1e-15);
    assert_eq!(cells[4], 0.0);
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_defaults_overrides_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let echo = dir.path().join("echo.toml");
    let echo2 = dir.path().join("echo2.toml");
    write(&cfg, &format!("step = \"{TWO_POINT}\"\norder = 2\nsource = \"lattice\"\n"));

    let a = walktail(&["moments", "--config", cfg.to_str().unwrap(), "--emit-config", echo.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let resolved = std::fs::read_to_string(&echo).unwrap();
    for key in ["h = ", "top = ", "eps = ", "order = 2"] {
        assert!(resolved.contains(key), "{resolved}");
    }

    let b = walktail(&["moments", "--config", echo.to_str().unwrap(), "--emit-config", echo2.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(resolved, std::fs::read_to_string(&echo2).unwrap());

    let c = walktail(&["moments", "--config", cfg.to_str().unwrap(), "--order", "3"]);
    assert_eq!(c.status.code(), Some(0));
    assert!(stderr(&c).contains("--order = 3 overrides config value 2"), "{}", stderr(&c));
    let json: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(json["order"], 3);

    write(&cfg, "step = \"x\"\n\nordr = 2\n");
    let d = walktail(&["moments", "--config", cfg.to_str().unwrap()]);
    assert_eq!(d.status.code(), Some(1));
    assert!(stderr(&d).contains("line 3") && stderr(&d).contains("ordr"), "{}", stderr(&d));
}

#[test]
fn validation_gate_exit_codes() {
    let ok = walktail(&["validate", "--case", "twopoint", "--reps", "100000", "--seed", "5"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    // too few paths to resolve the ladder tail: the gate must fail
    let bad = walktail(&["validate", "--case", "paretoshift", "--reps", "200", "--seed", "5"]);
    assert_eq!(bad.status.code(), Some(2), "{}", stdout(&bad));
    assert!(stdout(&bad).contains(",false"));
    assert_eq!(walktail(&["validate", "--case", "nope"]).status.code(), Some(1));
}

#[test]
fn symbolic_listing_variants() {
    let o = walktail(&["expand", "--order", "4", "--symbolic", "--all-terms"]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("D^")).count(), 4);
    let o = walktail(&["expand", "--order", "2", "--symbolic", "--in-step-mean"]);
    let first = stdout(&o).lines().find(|l| l.starts_with("D^-1")).unwrap().to_string();
    assert_eq!(first, "D^-1: mu[F,1]^-1");
    let o = walktail(&["expand", "--order", "1", "--symbolic", "--operator", "penultimate", "--format", "json"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["terms"][0]["power"], 0);
    assert_eq!(json["terms"][0]["coeff"], "q^-1");
}

#[test]
fn lemma1_deterministic_converges() {
    let o = walktail(&["lemma1", "--xgrid", "log:10:10000:4"]);
    let ratios: Vec<f64> = stdout(&o)
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
    assert!((ratios[3] - 1.0).abs() < 1e-3);
}
