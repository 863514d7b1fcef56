use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn survcop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_survcop"))
        .current_dir(dir)
        .env("SURVCOP_WORKERS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Dotted key paths of a JSON document; arrays contribute their first element.
/// Set `SURVCOP_UPDATE_GOLDEN` to rewrite the expected key lists.
fn key_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                out.insert(p.clone());
                key_paths(child, &p, out);
            }
        }
        Value::Array(a) => {
            if let Some(first) = a.first() {
                key_paths(first, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

fn assert_schema(v: &Value, golden: &str) {
    let mut keys = BTreeSet::new();
    key_paths(v, "", &mut keys);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(golden);
    if std::env::var_os("SURVCOP_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, keys.iter().map(|k| format!("{k}\n")).collect::<String>()).unwrap();
    }
    let expected: BTreeSet<String> =
        fs::read_to_string(&path).unwrap().lines().filter(|l| !l.is_empty()).map(str::to_string).collect();
    let missing: Vec<_> = expected.difference(&keys).collect();
    let extra: Vec<_> = keys.difference(&expected).collect();
    assert!(missing.is_empty() && extra.is_empty(), "{golden}: missing {missing:?}, unexpected {extra:?}");
}

const SCENARIO: &str = r#"
seed = 11
[scenario]
copula = "Clayton"
tau = 0.25
n = 300
"#;

/// Simulates a YP dataset into `dir` and returns its path.
fn simulated(dir: &Path) -> PathBuf {
    write(dir, "sim.toml", SCENARIO);
    let o = survcop(dir, &["simulate", "sim.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("dataset.csv")
}

fn model_config(dir: &Path, name: &str, copula: &str, class: &str, extra: &str) -> PathBuf {
    write(dir, name, &format!("[model]\ncopula = \"{copula}\"\nclass = \"{class}\"\n{extra}"))
}

#[test]
fn simulate_is_deterministic_and_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path());
    let first = fs::read_to_string(&data).unwrap();
    assert_eq!(first.lines().count(), 301);
    assert!(first.starts_with("cluster_id,y1,d1,y2,d2,x1_z1,x1_z2,x2_z1,x2_z2\n"));
    let o = survcop(dir.path(), &["simulate", "sim.toml"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("failure rates"));
    assert_eq!(fs::read_to_string(&data).unwrap(), first);
    let other = survcop(dir.path(), &["--seed", "12", "simulate", "sim.toml"]);
    assert!(other.status.success());
    assert_ne!(fs::read_to_string(&data).unwrap(), first);
    let report = json(dir.path().join("simulate.json"));
    assert_schema(&report, "simulate.keys");
    assert_eq!(report["clusters"], 300);
}

#[test]
fn fit_report_matches_schema_and_aic() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    model_config(dir.path(), "fit.toml", "Clayton", "YP", "");
    let o = survcop(dir.path(), &["--out-dir", "out", "fit", "fit.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(dir.path().join("out/fit.json"));
    assert_schema(&r, "fit.keys");
    let (k, ll, aic) = (r["n_params"].as_f64().unwrap(), r["loglik"].as_f64().unwrap(), r["aic"].as_f64().unwrap());
    assert_eq!(k, 13.0);
    assert!((aic - (2.0 * k - 2.0 * ll)).abs() < 1e-9);
    assert_eq!(r["model"], "Clayton-Weibull-YP");
    let tau = &r["tau"];
    assert!(tau["lower"].as_f64().unwrap() < tau["tau"].as_f64().unwrap());
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    model_config(dir.path(), "fit.toml", "Frank", "YP", "[fit]\nmax_iter = 2\nrestarts = 0\n");
    let o = survcop(dir.path(), &["fit", "fit.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(json(dir.path().join("fit.json"))["converged"], false);
}

#[test]
fn malformed_input_exits_with_one_and_names_lines() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "cluster_id,y1,d1,y2,d2\na,1,1,2,0\nb,1,,2,0\nc,1,1,0,1\n");
    model_config(dir.path(), "fit.toml", "Clayton", "PH", "");
    let o = survcop(dir.path(), &["fit", "fit.toml", "--data", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 3: missing value in column d1"), "{err}");
    assert!(err.contains("line 4: y2 = 0 must be positive"), "{err}");

    write(dir.path(), "typo.toml", "[model]\ncopula = \"Clayton\"\nclas = \"PH\"\n");
    let o = survcop(dir.path(), &["fit", "typo.toml", "--data", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown field `clas`"), "{}", stderr(&o));
}

#[test]
fn crossing_reports_interval_or_absence() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let block = "[crossing]\nx_control = [0, 0]\nx_treat = [1, 0]\nreplicates = 12\n";
    model_config(dir.path(), "yp.toml", "Clayton", "YP", block);
    let o = survcop(dir.path(), &["--out-dir", "yp", "crossing", "yp.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(dir.path().join("yp/crossing.json"));
    assert_schema(&r, "crossing.keys");
    assert_eq!(r["status"], "crossing");
    let (lo, hi, t) = (r["lower"].as_f64().unwrap(), r["upper"].as_f64().unwrap(), r["point"]["time"].as_f64().unwrap());
    assert!(lo.is_finite() && hi.is_finite() && lo < hi && t > 0.0);

    model_config(dir.path(), "ph.toml", "Clayton", "PH", block);
    let o = survcop(dir.path(), &["--out-dir", "ph", "crossing", "ph.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(dir.path().join("ph/crossing.json"));
    assert_eq!(r["status"], "no_crossing");
    assert_eq!(r["message"], "no crossing in bracket");
}

#[test]
fn lrtest_decides_and_rejects_non_nested_pairs() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    model_config(dir.path(), "ph.toml", "Clayton", "PH", "");
    model_config(dir.path(), "yp.toml", "Clayton", "YP", "");
    let o = survcop(dir.path(), &["lrtest", "ph.toml", "yp.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(dir.path().join("lrtest.json"));
    assert_schema(&r, "lrtest.keys");
    assert_eq!(r["decision"], "YP");
    assert_eq!(r["df"], 4);

    let o = survcop(dir.path(), &["lrtest", "yp.toml", "yp.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not nested"), "{}", stderr(&o));
}

#[test]
fn mc_writes_summary_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{SCENARIO}\n[mc]\nreplicas = 3\nspecs = [{{ copula = \"Clayton\", class = \"PH\" }}, {{ copula = \"Frank\", class = \"PH\" }}]\n[fit]\nstandard_errors = true\n"
    );
    write(dir.path(), "mc.toml", &cfg);
    let o = survcop(dir.path(), &["--workers", "2", "mc", "mc.toml"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{}", stderr(&o));
    let r = json(dir.path().join("mc.json"));
    assert_schema(&r, "mc.keys");
    for q in r["specs"][0]["quantities"].as_array().unwrap() {
        for key in ["ae", "sde", "ase", "arb", "alb", "aub", "cr"] {
            assert!(q.get(key).is_some(), "{key} missing in {q}");
        }
    }
    let records = fs::read_to_string(dir.path().join("mc_records.csv")).unwrap();
    assert!(records.starts_with("replica,model,converged,loglik,aic,parameter,value,se,lower,upper,error\n"));
    assert!(records.contains(",Frank-Weibull-PH,"));
}

#[test]
fn sweep_tabulates_requested_combinations() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    write(dir.path(), "sweep.toml", "[sweep]\ncopulas = [\"Clayton\", \"Frank\"]\nbaselines = [\"Weibull\", \"PE\"]\nclasses = [\"PH\"]\nsize = 4\n");
    let o = survcop(dir.path(), &["sweep", "sweep.toml", "--data", "dataset.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(dir.path().join("sweep.json"));
    assert_schema(&r, "sweep.keys");
    assert_eq!(r["rows"].as_array().unwrap().len(), 4);
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.contains("Frank-PE-PH,Frank,PE,PH,"));
}

#[test]
fn prepare_builds_dataset_and_flags_ties() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", "id,progression,death,censor,cxcl12\ns1,2,5,10,1.5\ns2,,5,3,2.5\ns3,4,4,10,0.5\n");
    let o = survcop(dir.path(), &["prepare", "raw.csv", "--output", "semi.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("semi.csv")).unwrap();
    assert_eq!(
        text,
        "cluster_id,y1,d1,y2,d2,x1_cxcl12,x2_cxcl12\ns1,2,1,5,1,1.5,1.5\ns2,3,0,3,0,2.5,2.5\ns3,4,0,4,1,0.5,0.5\n"
    );
    let summary = json(dir.path().join("prepare.json"));
    assert_eq!(summary["ties"], serde_json::json!(["s3"]));

    write(dir.path(), "neg.csv", "id,progression,death,censor\na,1,2,3\nb,-1,2,3\n");
    let o = survcop(dir.path(), &["prepare", "neg.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3: progression time -1 must be positive"), "{}", stderr(&o));
}
