use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ega_core::datagen::{build_implied_sigma, dichotomize, sample_dataset, FactorSpec};
use serde_json::Value;
use tempfile::TempDir;

fn ega() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ega"))
}

fn run(args: &[&str]) -> Output {
    ega().args(args).output().expect("spawn ega")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a simulated 0/1 dataset with header `i1..ip`.
fn binary_csv(dir: &Path, n_factors: usize, items: usize, n: usize, seed: u64) -> PathBuf {
    let sigma = build_implied_sigma(&FactorSpec::new(n_factors, items, 0.0).unwrap()).unwrap();
    let data = dichotomize(&sample_dataset(&sigma, n, seed).unwrap());
    let p = data.n_items();
    let mut text = (1..=p).map(|i| format!("i{i}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for r in 0..n {
        let row: Vec<String> = (0..p).map(|c| data.values[(r, c)].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.join(format!("data{seed}.csv"));
    fs::write(&path, text).unwrap();
    path
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn validate(schema_name: &str, instance: &Value) {
    let mut opts = jsonschema::options();
    for dep in ["fit-ega.schema.json", "fit-retention.schema.json"] {
        let resource = jsonschema::Resource::from_contents(schema(dep)).unwrap();
        opts = opts.with_resource(format!("json-schema:///{dep}"), resource);
    }
    let validator = opts.build(&schema(schema_name)).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_ega_writes_report_and_edges() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 2, 5, 1000, 3);
    let (report, edges) = (dir.path().join("ega.json"), dir.path().join("edges.csv"));
    let out = run(&[
        "fit",
        data.to_str().unwrap(),
        "-o",
        report.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = read_json(&report);
    validate("fit-ega.schema.json", &json);
    assert_eq!(json["ndim"], 2);
    assert_eq!(json["correlation"], "tetrachoric");
    assert_eq!(json["dim_variables"][0]["item"], "i1");
    let edge_text = fs::read_to_string(&edges).unwrap();
    let mut lines = edge_text.lines();
    assert_eq!(lines.next(), Some("item_i,item_j,weight"));
    assert_eq!(lines.count() as u64, json["n_edges"].as_u64().unwrap());
}

#[test]
fn fit_retention_methods_match_schema() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 2, 5, 800, 4);
    for method in ["pa", "kaiser", "vss", "map", "bic", "ebic"] {
        let out = run(&["fit", data.to_str().unwrap(), "--method", method, "--seed", "1"]);
        assert_eq!(code(&out), 0, "{method}: {}", stderr(&out));
        let json: Value = serde_json::from_slice(&out.stdout).unwrap();
        validate("fit-retention.schema.json", &json);
        assert_eq!(json["method"], method);
        assert_eq!(json["k_hat"], 2, "{method}");
    }
    let pa = run(&["fit", data.to_str().unwrap(), "--method", "pa", "--seed", "1"]);
    let again = run(&["fit", data.to_str().unwrap(), "--method", "pa", "--seed", "1"]);
    assert_eq!(pa.stdout, again.stdout);
    let json: Value = serde_json::from_slice(&pa.stdout).unwrap();
    assert_eq!(json["observed"].as_array().unwrap().len(), 10);
    assert_eq!(json["reference"].as_array().unwrap().len(), 10);
}

#[test]
fn missing_file_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("out.json");
    let out = run(&[
        "fit",
        dir.path().join("nope.csv").to_str().unwrap(),
        "-o",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert!(!report.exists());
    assert!(stderr(&out).contains("nope.csv"));
}

#[test]
fn malformed_cell_reports_row_and_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "a,b,c\n1,0,1\n0,x,1\n1,1,0\n").unwrap();
    let out = run(&["fit", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("row 3") && msg.contains("column b"), "{msg}");

    fs::write(&path, "a,b,c\n1,0,1\n0,1\n").unwrap();
    let out = run(&["fit", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn constant_column_exits_3_naming_it() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("const.csv");
    let mut text = String::from("q1,q2,q3\n");
    for r in 0..40 {
        text.push_str(&format!("{},1,{}\n", r % 2, (r / 2) % 2));
    }
    fs::write(&path, text).unwrap();
    let out = run(&["fit", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("q2"), "{}", stderr(&out));
}

#[test]
fn invalid_flags_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 2, 5, 200, 5);
    assert_eq!(code(&run(&["fit", data.to_str().unwrap(), "--gamma", "-1"])), 2);
    assert_eq!(code(&run(&["fit", data.to_str().unwrap(), "--method", "bogus"])), 2);
    assert_eq!(
        code(&run(&[
            "fit",
            data.to_str().unwrap(),
            "--method",
            "pa",
            "--edges",
            "e.csv"
        ])),
        2
    );
}

#[test]
fn compare_emits_kmax_rows_and_estimates() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 2, 5, 800, 6);
    let json_path = dir.path().join("cmp.json");
    let out = run(&[
        "compare",
        data.to_str().unwrap(),
        "--kmax",
        "5",
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,vss,map,bic,ebic,observed,reference");
    assert_eq!(lines.len(), 1 + 5 + 1);
    for (i, line) in lines[1..6].iter().enumerate() {
        assert!(line.starts_with(&format!("{},", i + 1)));
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 7);
        // every method defines k = 1..5 here except MAP beyond p - 2 and
        // factor models with negative degrees of freedom (k >= 5 at p = 10)
        assert!(!cells[2].is_empty() && !cells[5].is_empty() && !cells[6].is_empty());
    }
    assert_eq!(lines[6], "k_hat,2,2,2,2,2,2");
    let json = read_json(&json_path);
    validate("compare.schema.json", &json);
    assert_eq!(json["ega"]["ndim"], 2);
}

fn simulate_args(out_dir: &str) -> Vec<&str> {
    vec![
        "simulate",
        "--factors",
        "2",
        "--items",
        "5",
        "--n",
        "300",
        "--corr",
        "0.7",
        "--reps",
        "6",
        "--seed",
        "7",
        "--out-dir",
        out_dir,
    ]
}

#[test]
fn simulate_is_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run(&simulate_args(a.to_str().unwrap()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut args = vec!["--threads", "1"];
    args.extend(simulate_args(b.to_str().unwrap()));
    assert_eq!(code(&run(&args)), 0);
    for file in ["summary.csv", "rollup.csv", "replications.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        lines[0],
        "n_factors,items_per_factor,n,corr,method,n_reps,acc_mean,acc_sd,mbe_mean,mbe_sd,mae_mean,mae_sd,failures"
    );
    assert_eq!(lines.len(), 1 + 7);
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(methods, ["ega", "vss", "map", "bic", "ebic", "pa", "kaiser"]);
    assert!(lines[1].starts_with("2,5,300,0.7,ega,6,"));
    let manifest = read_json(&a.join("manifest.json"));
    validate("manifest.schema.json", &manifest);
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["parameters"]["reps"], 6);
}

#[test]
fn simulate_reads_config_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "reps = 3\nseed = 11\nmethods = [\"kaiser\", \"map\"]\nout_dir = {:?}\n\n[conditions]\nfactors = [2]\nitems = [5]\nn = [200, 400]\ncorr = [0.0]\n\n[settings]\nkmax = 4\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--reps", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("2,5,200,0,map,2,"), "{}", rows[0]);
    assert!(rows[3].starts_with("2,5,400,0,kaiser,2,"), "{}", rows[3]);
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["parameters"]["kmax"], 4);
    assert_eq!(manifest["seed"], 11);
}

#[test]
fn invalid_config_exits_2_with_field_path() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "reps = 3\n[settings]\ngamma = \"high\"\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--grid", "paper"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("settings.gamma"), "{}", stderr(&out));

    fs::write(&cfg, "methods = [\"ega\", \"scree\"]\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--grid", "paper"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("methods"), "{}", stderr(&out));

    fs::write(&cfg, "reps = 0\n[conditions]\ngrid = \"paper\"\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("reps"), "{}", stderr(&out));

    fs::write(&cfg, "rep = 3\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("rep"), "{}", stderr(&out));
}

#[test]
fn simulate_requires_conditions() {
    let out = run(&["simulate", "--factors", "2", "--reps", "1"]);
    assert_eq!(code(&out), 2);
    let out = run(&[
        "simulate",
        "--factors",
        "2",
        "--items",
        "5",
        "--n",
        "100",
        "--corr",
        "1.5",
        "--reps",
        "1",
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn full_grid_has_64_conditions() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("grid");
    let out = run(&[
        "simulate",
        "--grid",
        "paper",
        "--reps",
        "1",
        "--methods",
        "kaiser",
        "--eigen-basis",
        "component",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 64);
    assert!(summary.lines().nth(1).unwrap().starts_with("2,5,100,0,kaiser,1,"));
    assert!(summary.lines().last().unwrap().starts_with("4,10,5000,0.7,kaiser,1,"));
    let rollup = fs::read_to_string(out_dir.join("rollup.csv")).unwrap();
    // per factor count: 4 correlations + 4 sizes + 2 item counts + 1 total
    assert_eq!(rollup.lines().count(), 1 + 2 * (4 + 4 + 2 + 1));
}
