use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixopt_core::domains::{load_csv, CsvSchema};

const ONLINE: &str = r#"
seeds = [0, 1]

[online]
horizon = 200
p = 0.5
checkpoints = [50]
"#;

fn mixopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixopt"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run_online(dir: &Path, cfg: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(out);
    let mut args = vec![
        "online",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = mixopt(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn hash_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn help_lists_subcommands() {
    let o = mixopt(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["mixture", "coerm", "wstar", "online", "grouped", "phase"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[online]\nhorizn = 10\n");
    let o = mixopt(&["online", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizn"));

    let cfg = write_config(dir.path(), "[wstar]\nwidth = 3\n");
    let o = mixopt(&["wstar", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wstar.width"));

    let missing = dir.path().join("nope.toml");
    let o = mixopt(&["coerm", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = mixopt(&["coerm"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONLINE);
    let out = run_online(dir.path(), &cfg, "o", &[]);
    assert_eq!(
        names(&out),
        [
            "online_log_seed0.csv",
            "online_log_seed1.csv",
            "online_summary.json"
        ]
    );

    let first = hash_line(&out.join("online_log_seed0.csv"));
    let hash = first
        .strip_prefix("# mixopt online config_sha256=")
        .unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("online_summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["config_sha256"], hash);
    assert_eq!(json["kind"], "online");
    let runs = json["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for key in [
        "seed",
        "horizon",
        "p",
        "steps",
        "average_loss",
        "cumulative_regret",
        "label_count",
        "centers",
        "audits",
    ] {
        assert!(runs[0].get(key).is_some(), "missing {key}");
    }

    // Tables load as datasets keyed on their first column.
    let schema = CsvSchema {
        label_column: "t".into(),
        feature_columns: None,
    };
    let ds = load_csv(out.join("online_log_seed0.csv"), &schema).unwrap();
    assert_eq!(ds.len(), 200);
    assert_eq!(ds.n_features(), 6);
    assert_eq!(ds.label(199), 200.0);
}

#[test]
fn flags_override_the_file_and_out_does_not_change_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONLINE);
    let a = run_online(dir.path(), &cfg, "a", &[]);
    let b = run_online(dir.path(), &cfg, "b", &[]);
    assert_eq!(
        hash_line(&a.join("online_log_seed0.csv")),
        hash_line(&b.join("online_log_seed0.csv"))
    );

    let c = run_online(dir.path(), &cfg, "c", &["--seed", "7"]);
    assert_eq!(names(&c), ["online_log_seed7.csv", "online_summary.json"]);
    assert_ne!(
        hash_line(&a.join("online_log_seed0.csv")),
        hash_line(&c.join("online_log_seed7.csv"))
    );
}

#[test]
fn quadratic_match_preset_runs_without_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = mixopt(&[
        "mixture",
        "--preset",
        "quadratic-match",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("mixture_summary.json")).unwrap())
            .unwrap();
    let run = &json["runs"][0];
    assert_eq!(run["matched_source"], 0);
    assert!(run["matched_mass"].as_f64().unwrap() > 0.9);
}
