use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

use uwsvd::detect::Coords;
use uwsvd::solvers::Algorithm;
use uwsvd_sim::cond::{cond_cdf, empirical_cdf, Metric};
use uwsvd_sim::ser::{estimation_error, ser_curve};
use uwsvd_sim::SimConfig;

const SMALL: &str = r#"
[system]
m = 32
k_users = 4
n_ue = 2

[channel]
model = 2
corr_rho = 0.5

[detection]
snr_db = [6.0, 12.0]
qam_order = 4
solvers = ["ssor", "lbfgs"]
iterations = 6

[monte_carlo]
trials = 16
seed = 5
"#;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwsvd-sim"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn missing_required_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[system]\nk_users = 4\nn_ue = 2\n");
    let out = sim(&["ser-curve", "--config", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing field `m`"), "{err}");
}

#[test]
fn unknown_experiment_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &format!("experiment = \"bogus\"\n{SMALL}"));
    let out = sim(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["cond-cdf", "ser-curve", "est-error", "theory-check", "flops"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn cli_outputs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let mut csvs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = sim(&[
            "ser-curve",
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(out_dir.join("ser_curve.csv")).unwrap());
        assert!(out_dir.join("ser_curve.json").exists());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn overrides_take_precedence_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = sim(&[
        "ser-curve",
        "--config",
        &cfg,
        "--snr",
        "9",
        "--solvers",
        "cg",
        "--coords",
        "uwsvd",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("ser_curve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.contains(",9,cg,uwsvd,")), "{csv}");
}

#[test]
fn perfect_estimates_reproduce_the_ser_curve() {
    let mut config = SimConfig::from_toml_str(SMALL).unwrap();
    config.channel.varpi_db = vec![f64::INFINITY];
    let a = ser_curve(&config).unwrap();
    let b = estimation_error(&config).unwrap();
    for s in 0..config.detection.snr_db.len() {
        assert_eq!(a.exact_ser(0, s), b.exact_ser(0, s));
        for alg in [Algorithm::Ssor, Algorithm::Lbfgs] {
            for coords in [Coords::Original, Coords::ESignal] {
                assert_eq!(a.curve(0, s, alg, coords), b.curve(0, s, alg, coords));
            }
        }
    }
}

#[test]
fn condition_samples_form_valid_cdfs() {
    let config = SimConfig::from_toml_str(SMALL).unwrap();
    let res = cond_cdf(&config).unwrap();
    for metric in [Metric::AZf, Metric::ALmmse, Metric::PhiZf, Metric::PhiLmmse] {
        let samples = res.samples(metric);
        assert_eq!(samples.len() + res.trials_skipped, config.monte_carlo.trials);
        assert!(samples.iter().all(|&c| c >= 1.0 - 1e-12 && c.is_finite()));
    }
}

proptest! {
    #[test]
    fn empirical_cdf_is_monotone_and_ends_at_one(values in prop::collection::vec(-1e6f64..1e6, 1..64)) {
        let cdf = empirical_cdf(&values);
        prop_assert_eq!(cdf.len(), values.len());
        prop_assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        prop_assert!(cdf.iter().all(|&(_, p)| p > 0.0 && p <= 1.0));
        prop_assert_eq!(cdf.last().unwrap().1, 1.0);
    }
}
