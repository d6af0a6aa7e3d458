//! Drives the installed binary end to end: happy paths, the exit-code
//! contract (0 success, 1 usage, 2 data, 3 model), and config-file
//! precedence.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use drivesense::classifier::BehaviorClass;
use drivesense::dataset::{self, FeatureMatrix};
use drivesense::fixture::{self, FixtureConfig};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_drivesense"));
    // keep the suite hermetic even when the host shell exports a config
    cmd.env_remove("DRIVESENSE_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

/// Small fixture split into one labeled CSV per class plus a mixed test CSV.
fn write_class_files(dir: &Path) -> [PathBuf; 4] {
    let fx = fixture::generate(&FixtureConfig {
        rows_per_class: 80,
        test_rows_per_class: 30,
        ..FixtureConfig::default()
    });
    let train = &fx.train;
    let mut paths = Vec::new();
    for class in BehaviorClass::ALL {
        let mut t = Vec::new();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..train.n_rows() {
            if train.label(i) == class {
                t.push(train.t()[i]);
                data.extend_from_slice(train.row(i));
                labels.push(class);
            }
        }
        let matrix = FeatureMatrix::new(train.variant(), t, data, labels).unwrap();
        let path = dir.join(format!("{class}.csv"));
        dataset::write_csv_file(&path, &matrix).unwrap();
        paths.push(path);
    }
    let test_path = dir.join("test.csv");
    dataset::write_csv_file(&test_path, &fx.test).unwrap();
    paths.push(test_path);
    paths.try_into().unwrap()
}

#[test]
fn fixture_output_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out_dir in [&a, &b] {
        let out = bin()
            .args(["fixture", "--seed", "5", "--rows", "40", "--test-rows", "10", "--out-dir"])
            .arg(out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).starts_with("fixture seed 5 variant B: 120 train rows"));
    }
    for name in ["train.csv", "test.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
    let out = bin()
        .args(["fixture", "--seed", "6", "--rows", "40", "--test-rows", "10", "--out-dir"])
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_ne!(
        fs::read(a.join("train.csv")).unwrap(),
        fs::read(c.join("train.csv")).unwrap(),
        "different seeds must not collide"
    );
}

#[test]
fn train_classify_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let [drowsy, normal, aggressive, test] = write_class_files(dir.path());
    let model = dir.path().join("model.json");

    let out = bin()
        .arg("train")
        .arg("--drowsy")
        .arg(&drowsy)
        .arg("--normal")
        .arg(&normal)
        .arg("--aggressive")
        .arg(&aggressive)
        .arg("--out")
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("== PCA"), "missing PCA block:\n{text}");
    assert!(text.contains("== Training =="), "missing training block:\n{text}");
    assert!(text.contains("model written to"), "missing output note:\n{text}");
    assert!(model.exists());

    let trace = dir.path().join("trace.csv");
    let out = bin()
        .arg("classify")
        .arg("--model")
        .arg(&model)
        .arg("--input")
        .arg(&test)
        .arg("--output")
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace_text = fs::read_to_string(&trace).unwrap();
    let mut lines = trace_text.lines();
    assert_eq!(lines.next(), Some("t,eps_d,eps_n,eps_a,label"));
    assert_eq!(lines.count(), 90, "one trace row per test row");

    let out = bin()
        .arg("evaluate")
        .arg("--model")
        .arg(&model)
        .arg("--data")
        .arg(&test)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("== Validation: test =="), "got:\n{text}");
    assert!(text.contains("== Confusion: test =="), "got:\n{text}");

    let traces_dir = dir.path().join("traces");
    let out = bin()
        .arg("evaluate")
        .arg("--model")
        .arg(&model)
        .args(["--fixture", "--format", "json", "--traces-out"])
        .arg(&traces_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["validation"][0]["dataset"], "fixture-test");
    assert!(doc["confusion"][0]["metrics"][0]["tpr"]["percent"].is_string());
    assert!(traces_dir.join("fixture-test_trace.csv").exists());
}

#[test]
fn classify_reads_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = bin()
        .args(["train", "--fixture", "--rows", "60", "--out"])
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let fx = fixture::generate(&FixtureConfig {
        rows_per_class: 60,
        test_rows_per_class: 5,
        ..FixtureConfig::default()
    });
    let mut csv = Vec::new();
    dataset::write_csv(&mut csv, &fx.test).unwrap();

    let mut child = bin()
        .arg("classify")
        .arg("--model")
        .arg(&model)
        .args(["--input", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&csv).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("t,eps_d,eps_n,eps_a,label"));
    assert_eq!(text.lines().count(), 16);
}

#[test]
fn empty_input_yields_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = bin()
        .args(["train", "--fixture", "--rows", "60", "--out"])
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "t,ax,ay,az,fax,fay,faz,v,label\n").unwrap();
    let out = bin()
        .arg("classify")
        .arg("--model")
        .arg(&model)
        .arg("--input")
        .arg(&empty)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "t,eps_d,eps_n,eps_a,label\n");
}

#[test]
fn usage_errors_exit_1() {
    let out = run(&["train", "--bogus"]);
    assert_eq!(code(&out), 1, "unknown flag");

    let out = run(&["fixture", "--variant", "C"]);
    assert_eq!(code(&out), 1, "bad variant value");
    assert!(stderr(&out).contains("expected A or B"));

    let out = run(&["evaluate", "--model", "whatever.json"]);
    assert_eq!(code(&out), 1, "nothing to evaluate is a usage error");

    let out = run(&["--help"]);
    assert_eq!(code(&out), 0, "help is not an error");
    let out = run(&["--version"]);
    assert_eq!(code(&out), 0, "version is not an error");
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let [drowsy, _, _, test] = write_class_files(dir.path());

    let out = bin().arg("train").arg("--drowsy").arg(&drowsy).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("no training data for class normal"),
        "error must name the missing class: {}",
        stderr(&out)
    );

    // a mixed-label file cannot be supplied as a single-class input
    let out = bin().arg("train").arg("--drowsy").arg(&test).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("labeled"), "{}", stderr(&out));

    let out = bin()
        .arg("classify")
        .args(["--model", "absent.json", "--input"])
        .arg(&test)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "missing model file is a model error");

    // variant A input against a variant B model
    let model = dir.path().join("model.json");
    let out = bin()
        .args(["train", "--fixture", "--rows", "60", "--out"])
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let a_dir = dir.path().join("variant_a");
    let out = bin()
        .args(["fixture", "--variant", "A", "--rows", "10", "--test-rows", "5", "--out-dir"])
        .arg(&a_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = bin()
        .arg("classify")
        .arg("--model")
        .arg(&model)
        .arg("--input")
        .arg(a_dir.join("test.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("variant"), "{}", stderr(&out));

    let out = bin()
        .arg("classify")
        .arg("--model")
        .arg(&model)
        .args(["--input", "does-not-exist.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "missing input file is a data error");
}

#[test]
fn model_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = bin()
        .args(["train", "--fixture", "--rows", "60", "--out"])
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let input = dir.path().join("input.csv");
    fs::write(&input, "t,ax,ay,az,fax,fay,faz,v,label\n").unwrap();

    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, "{ this is not json").unwrap();
    let out = bin()
        .arg("classify")
        .arg("--model")
        .arg(&corrupt)
        .arg("--input")
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    let text = fs::read_to_string(&model).unwrap();
    assert!(text.contains("\"format_version\":1"), "model layout changed");
    let bumped = dir.path().join("bumped.json");
    fs::write(&bumped, text.replace("\"format_version\":1", "\"format_version\":99")).unwrap();
    let out = bin()
        .arg("classify")
        .arg("--model")
        .arg(&bumped)
        .arg("--input")
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("version"), "{}", stderr(&out));
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("drivesense.toml");
    fs::write(&config, "seed = 5\nrows = 40\ntest_rows = 10\n").unwrap();

    let by_config = dir.path().join("by_config");
    let out = bin()
        .arg("--config")
        .arg(&config)
        .args(["fixture", "--out-dir"])
        .arg(&by_config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let by_flags = dir.path().join("by_flags");
    let out = bin()
        .args(["fixture", "--seed", "5", "--rows", "40", "--test-rows", "10", "--out-dir"])
        .arg(&by_flags)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        fs::read(by_config.join("train.csv")).unwrap(),
        fs::read(by_flags.join("train.csv")).unwrap(),
        "config values must act like the equivalent flags"
    );

    let flag_wins = dir.path().join("flag_wins");
    let out = bin()
        .arg("--config")
        .arg(&config)
        .args(["fixture", "--seed", "9", "--out-dir"])
        .arg(&flag_wins)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let seed9 = dir.path().join("seed9");
    let out = bin()
        .args(["fixture", "--seed", "9", "--rows", "40", "--test-rows", "10", "--out-dir"])
        .arg(&seed9)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        fs::read(flag_wins.join("train.csv")).unwrap(),
        fs::read(seed9.join("train.csv")).unwrap(),
        "an explicit flag must override the config file"
    );

    // the config path can also arrive through the environment
    let by_env = dir.path().join("by_env");
    let out = Command::new(env!("CARGO_BIN_EXE_drivesense"))
        .env("DRIVESENSE_CONFIG", &config)
        .args(["fixture", "--out-dir"])
        .arg(&by_env)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        fs::read(by_env.join("train.csv")).unwrap(),
        fs::read(by_config.join("train.csv")).unwrap(),
        "DRIVESENSE_CONFIG must behave like --config"
    );

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "not_a_real_key = 1\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&bad)
        .args(["fixture", "--out-dir"])
        .arg(dir.path().join("never"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "unknown config keys are usage errors");
    assert!(stderr(&out).contains("not_a_real_key"), "{}", stderr(&out));
}
