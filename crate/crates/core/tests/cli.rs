use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use backsim::scenario::Scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_backsim"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str], scenario: &Path, out: &Path) -> Output {
    bin()
        .args(&args[..1])
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TWO_NB: &str = r#"
horizon = 1.0
n_paths = 50
seed = 1
correlation = [[1.0, 0.999], [0.999, 1.0]]

[[marginals]]
type = "negative_binomial"
mean = 3.0
variance = 30.0

[[marginals]]
type = "negative_binomial"
mean = 30.0
variance = 35.0
"#;

#[test]
fn usage_errors_exit_1() {
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["simulate"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn parse_errors_exit_1_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "horizon = 1.0\nn_paths = \"many\"\n");
    let out = run(&["calibrate"], &bad, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") || err.contains("n_paths"), "{err}");

    let under = write(
        dir.path(),
        "under.toml",
        &TWO_NB.replace("variance = 30.0", "variance = 1.0"),
    );
    let out = run(&["calibrate"], &under, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overdispersion"));

    let missing = run(&["calibrate"], &dir.path().join("nope.toml"), dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn infeasible_target_exits_2_and_names_pair() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", TWO_NB);
    let out = run(&["calibrate"], &s, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(1,2)"), "{err}");
    assert!(err.contains("0.80079"), "admissible max missing: {err}");
    // ranges are written before calibration fails
    let ranges = std::fs::read_to_string(dir.path().join("admissible_ranges.csv")).unwrap();
    assert!(ranges.starts_with("k,l,rho_min,rho_max,target\n1,2,"));
    // simulate propagates the failure
    assert_eq!(run(&["simulate"], &s, dir.path()).status.code(), Some(2));
}

#[test]
fn calibrate_writes_weights_summing_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["calibrate"], &scenario("nb_poisson_pos.toml"), dir.path());
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("weights.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["structure", "weight"]);
    let rows: Vec<(String, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].0, "00");
    assert!((rows.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-12);
    let corrs = std::fs::read_to_string(dir.path().join("extreme_corrs.csv")).unwrap();
    assert!(corrs.starts_with("structure,k,l,rho\n00,1,2,0.93"));
}

#[test]
fn identical_marginals_at_full_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_NB
        .replace("mean = 30.0", "mean = 3.0")
        .replace("variance = 35.0", "variance = 30.0")
        .replace("0.999", "1.0");
    let s = write(dir.path(), "s.toml", &text);
    assert!(run(&["calibrate"], &s, dir.path()).status.success());
    let w = std::fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    assert_eq!(w, "structure,weight\n00,1\n01,0\n");
}

#[test]
fn simulate_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(i.to_string());
        let out = run(
            &["simulate", "--paths", "300", "--seed", "5", "--threads", threads],
            &scenario("validate_default.toml"),
            &out_dir,
        );
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("paths/sec"));
        outputs.push((
            std::fs::read(out_dir.join("events.csv")).unwrap(),
            std::fs::read(out_dir.join("counts.csv")).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1] && outputs[0] == outputs[2]);

    let single = dir.path().join("single");
    let a = run(&["simulate", "--paths", "1"], &scenario("nb_poisson_neg.toml"), &single);
    assert!(a.status.success());
    let first = std::fs::read(single.join("events.csv")).unwrap();
    run(&["simulate", "--paths", "1"], &scenario("nb_poisson_neg.toml"), &single);
    assert_eq!(first, std::fs::read(single.join("events.csv")).unwrap());
}

#[test]
fn seven_periods_stay_below_seven() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--paths", "500"], &scenario("nb_poisson_pos.toml"), dir.path());
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("events.csv")).unwrap();
    let max = r
        .records()
        .map(|rec| rec.unwrap()[2].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(max < 7.0 && max > 6.0, "{max}");
    let counts = std::fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    assert!(counts.starts_with("path_id,coordinate,period,count\n0,1,0,"));
    assert_eq!(counts.lines().count(), 1 + 500 * 2 * 7);
}

#[test]
fn curve_files_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["curve", "--paths", "2000"], &scenario("validate_default.toml"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["curve_1_2.csv", "curve_1_3.csv", "curve_2_3.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("time,rho_theoretical,rho_empirical,stderr,n_paths\n"));
        assert_eq!(text.lines().count(), 1 + 30);
    }

    // Poisson pair: theoretical column linear in t
    let out = run(&["curve", "--paths", "500"], &scenario("poisson_linear.toml"), dir.path());
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("curve_1_2.csv")).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let rho: f64 = rec[1].parse().unwrap();
        assert!((rho - 0.6 * t / 2.0).abs() < 1e-12);
    }

    // grid-point exactness of the theoretical column under continuation
    let out = run(&["curve", "--paths", "500"], &scenario("nb_poisson_neg.toml"), dir.path());
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("curve_1_2.csv")).unwrap();
    let mut hits = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        if (t - t.round()).abs() < 1e-12 {
            assert!((rec[1].parse::<f64>().unwrap() + 0.7).abs() < 1e-12, "t={t}");
            hits += 1;
        }
    }
    assert_eq!(hits, 7);
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["validate", "--paths", "10000"], &scenario("validate_default.toml"), dir.path());
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(ok.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS lp_oracle_ejd") && text.contains("PASS frechet_forward"));

    let bad = run(
        &["validate", "--paths", "10000", "--corrupt-weights"],
        &scenario("validate_default.toml"),
        dir.path(),
    );
    let text = String::from_utf8_lossy(&bad.stdout);
    assert_eq!(bad.status.code(), Some(3), "{text}");
    assert!(text.contains("FAIL chi_square_marginal_1"));
    assert!(text.contains("p-value="));
}

#[test]
fn validate_seed_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures: std::collections::BTreeMap<String, usize> = Default::default();
    for seed in 1..=10 {
        let out = run(
            &["validate", "--paths", "10000", "--seed", &seed.to_string()],
            &scenario("validate_default.toml"),
            dir.path(),
        );
        for line in String::from_utf8_lossy(&out.stdout).lines() {
            if let Some(rest) = line.strip_prefix("FAIL ") {
                let name = rest.split(':').next().unwrap().to_string();
                *failures.entry(name).or_default() += 1;
            }
        }
    }
    assert!(failures.values().all(|&n| n <= 1), "{failures:?}");
}

#[test]
fn scenario_round_trip() {
    for name in [
        "nb_pair_pos.toml",
        "nb_pair_neg.toml",
        "nb_poisson_pos.toml",
        "nb_poisson_neg.toml",
        "poisson_linear.toml",
        "validate_default.toml",
    ] {
        let s = Scenario::from_file(scenario(name)).unwrap();
        let text = s.to_toml_string().unwrap();
        let again = Scenario::parse(&text).unwrap();
        assert_eq!(s, again, "{name}");
        assert_eq!(text, again.to_toml_string().unwrap());
    }
}
