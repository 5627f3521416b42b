use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use seqbandit_cli::config::RunConfigFile;
use seqbandit_cli::{bounds_report, cmd_dump_env, cmd_run, RunOverrides};

const SMALL: &str = r#"
[env]
arms = 3
tasks = 4
task_length = 250
epsilon = [0.05, 0.2]
reward_width = 0.1
seed = 11

[experiment]
realizations = 3
record_stride = 100

[tr_ucb2]
uniform_steps = 60
phase_one_tasks = 2
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn run_writes_all_outputs_with_expected_row_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let overrides = RunOverrides {
        out: Some(out.clone()),
        ..Default::default()
    };
    cmd_run(&cfg, &overrides).unwrap();
    let rows = read_csv(&out.join("curves.csv"));
    // 4 tasks of 250 with stride 100: 0, 100, 200, 250, 300, ... 1000.
    let samples = 1 + 10 + 4 - 2;
    assert_eq!(rows.len(), 4 * 2 * (3 + 1) * samples);
    assert!(rows.iter().any(|r| r[2] == "mean"));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["env"]["seed"], 11);
    assert_eq!(summary["experiment"]["realizations"], 3);
    assert_eq!(summary["policies"][2]["uniform_steps"], 60);
    assert_eq!(summary["results"].as_array().unwrap().len(), 2);
    let nt = &summary["results"][0]["algorithms"][0];
    assert_eq!(nt["algorithm"], "nt_ucb");
    assert!(nt["bound_mean"].as_f64().unwrap() >= nt["final_mean"].as_f64().unwrap());
    assert!(summary["results"][0]["algorithms"][3]["bound_mean"].is_null());

    let svg = fs::read_to_string(out.join("regret.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);
    assert!(svg.contains("Tr-UCB2"));
}

#[test]
fn algos_filter_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("nt");
    let overrides = RunOverrides {
        eps: Some("0.1".into()),
        seeds: Some(2),
        seed: Some(99),
        algos: Some("nt_ucb".into()),
        out: Some(out.clone()),
        no_plot: true,
    };
    cmd_run(&cfg, &overrides).unwrap();
    let rows = read_csv(&out.join("curves.csv"));
    assert!(rows.iter().all(|r| r[0] == "nt_ucb" && r[1] == "0.100000"));
    assert_eq!(rows.len(), 3 * 13);
    assert!(!out.join("regret.svg").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["env"]["seed"], 99);
    assert_eq!(summary["env"]["epsilon"], serde_json::json!([0.1]));
    assert_eq!(
        summary["experiment"]["algorithms"],
        serde_json::json!(["nt_ucb"])
    );
}

#[test]
fn curves_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = RunOverrides {
            out: Some(out.clone()),
            ..Default::default()
        };
        cmd_run(&cfg, &o).unwrap();
        texts.push((
            fs::read(out.join("curves.csv")).unwrap(),
            fs::read(out.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(texts[0].0, texts[1].0);
}

#[test]
fn zero_gap_table_gives_zero_bounds() {
    let cfg = RunConfigFile::parse(
        "[bounds]\ngaps = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]\ntask_lengths = [100, 100, 100]\nepsilon = 0.1\n",
    )
    .unwrap();
    let r = &bounds_report(&cfg).unwrap().reports[0];
    assert_eq!(r.nt_ucb, 0.0);
    assert_eq!(r.tr_ucb.total, 0.0);
    assert_eq!(r.tr_ucb2, 0.0);
    assert!(r
        .benefit
        .iter()
        .all(|b| !b.beneficial && b.a == 0.0 && b.e == 0.0 && b.f == 0.0));
}

#[test]
fn single_arm_gap_table_matches_closed_form() {
    let cfg =
        RunConfigFile::parse("[bounds]\ngaps = [[0.2]]\ntask_lengths = [100]\nepsilon = 0.1\n")
            .unwrap();
    let r = &bounds_report(&cfg).unwrap().reports[0];
    assert!((r.nt_ucb - 373.2844).abs() < 1e-4, "{}", r.nt_ucb);
}

#[test]
fn bound_report_schema_has_pair_terms() {
    let cfg = RunConfigFile::parse(
        "[bounds]\ngaps = [[0.1, 0.2, 0.15], [0.0, 0.05, 0.0]]\ntask_lengths = [500, 500, 500]\nepsilon = 0.05\n",
    )
    .unwrap();
    let json = serde_json::to_value(bounds_report(&cfg).unwrap()).unwrap();
    let arm = &json["reports"][0]["tr_ucb"]["arms"][0];
    let pair = &arm["pairs"][0];
    for key in ["u", "v", "min"] {
        assert!(pair[key].is_number(), "{key}");
    }
    assert!(arm["w"].as_f64().unwrap() > 0.0);
    assert!(json["reports"][0]["benefit"][0]["beneficial"].is_boolean());
}

#[test]
fn generated_bounds_one_report_per_epsilon() {
    let cfg = RunConfigFile::parse(SMALL).unwrap();
    let file = bounds_report(&cfg).unwrap();
    assert_eq!(file.reports.len(), 2);
    assert_eq!(file.reports[0].realization, Some(0));
    assert_eq!(file.reports[1].gaps.tasks(), 4);
}

fn dump(dir: &Path, text: &str, eps: Option<f64>) -> Vec<Vec<f64>> {
    let cfg = write_config(dir, text);
    let out = dir.join("means.csv");
    cmd_dump_env(&cfg, eps, 0, Some(&out)).unwrap();
    let mut r = csv::Reader::from_path(&out).unwrap();
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "arm");
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .skip(1)
                .map(|c| c.parse().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn dump_env_cells_and_similarity() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[env]\narms = 4\ntasks = 7\ntask_length = 100\nepsilon = [0.15]\n";
    let rows = dump(tmp.path(), text, None);
    assert_eq!(rows.len() * rows[0].len(), 4 * 7);
    for row in &rows {
        for w in row.windows(2) {
            // Cells carry six significant digits.
            assert!((w[1] - w[0]).abs() <= 0.15 + 1e-5);
        }
    }
    let flat = dump(tmp.path(), text, Some(0.0));
    assert!(flat.iter().all(|row| row.iter().all(|&m| m == row[0])));
}

#[test]
fn dump_env_needs_single_epsilon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let err = cmd_dump_env(&cfg, None, 0, None).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqbandit"))
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "[env]\narms = 3\ncolour = 2\n");
    let o = binary().args(["bounds"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let invalid = write_config(tmp.path(), "[env]\narms = 1\n");
    let o = binary()
        .args(["dump-env", "--eps", "0.1"])
        .arg(&invalid)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));

    let missing = tmp.path().join("missing.toml");
    let o = binary().args(["bounds"]).arg(&missing).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let good = write_config(
        tmp.path(),
        "[bounds]\ngaps = [[0.2]]\ntask_lengths = [100]\nepsilon = 0.1\n",
    );
    let o = binary().args(["bounds"]).arg(&good).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(json["reports"][0]["nt_ucb"].as_f64().is_some());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("from_env");
    let o = binary()
        .args(["run", "--seeds", "1", "--algos", "nt_ucb", "--eps", "0.1"])
        .arg(&cfg)
        .env("SEQBANDIT_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.join("curves.csv").exists());
}
