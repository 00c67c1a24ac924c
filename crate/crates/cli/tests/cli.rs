//! Runs the `isi-e2e` binary end to end on a small AWGN experiment.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isi-e2e"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning isi-e2e");
    assert!(
        out.status.success(),
        "{:?} failed\nstdout:\n{}\nstderr:\n{}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let text = stdout(&run(bin().arg("--help")));
    for sub in ["train", "evaluate", "sweep", "robustness", "isi-metric", "eye"] {
        assert!(text.contains(sub), "help lacks {sub}:\n{text}");
    }
}

#[test]
fn sweep_writes_results_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/tiny.csv");
    let out = run(bin().args(["sweep", "--config"]).arg(data("tiny.toml")).arg("--out").arg(&csv));
    assert!(stdout(&out).contains("4 rows (0 aborted)"), "{}", stdout(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("sweep_var_name,sweep_value,variant,"));
    assert_eq!(lines.count(), 4);
    let script = std::fs::read_to_string(csv.with_extension("gp")).unwrap();
    assert!(script.contains("tiny.csv"));
}

#[test]
fn sweep_with_a_seed_override_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv"].iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        run(bin().args(["sweep", "--seed", "17", "--config"]).arg(data("tiny.toml")).arg("--out").arg(p));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn train_then_inspect_the_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("link.toml");
    std::fs::write(
        &config,
        "kind = \"awgn\"\n[system]\nsps = 4\n[awgn]\nsnr_db = 10.0\n\
         [training]\nn_symbols = 20000\nbatch_size = 500\n\
         [evaluation]\nmin_symbols = 4000\nblock_symbols = 4000\nmax_symbols = 8000\n",
    )
    .unwrap();
    let params = dir.path().join("params.toml");
    let log = dir.path().join("train.csv");
    let out = run(bin()
        .args(["train", "--variant", "PS_RxF", "--n-taps", "15", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&params)
        .arg("--log")
        .arg(&log));
    assert!(stdout(&out).contains("PS_RxF N=15"));
    assert!(std::fs::read_to_string(&log).unwrap().lines().count() > 10);

    let ser = dir.path().join("ser.csv");
    let out = run(bin().args(["evaluate", "--params"]).arg(&params).arg("--out").arg(&ser));
    assert!(stdout(&out).starts_with("PS_RxF SER"));
    let row = std::fs::read_to_string(&ser).unwrap();
    assert_eq!(row.lines().count(), 2);
    assert!(row.lines().nth(1).unwrap().starts_with("PS_RxF,"));

    let isi = dir.path().join("isi.csv");
    let out = run(bin().args(["isi-metric", "--params"]).arg(&params).arg("--out").arg(&isi));
    assert!(stdout(&out).contains("flatness"));
    assert!(isi.exists());

    let eye = dir.path().join("eye.csv");
    let out = run(bin().args(["eye", "--traces", "50", "--params"]).arg(&params).arg("--out").arg(&eye));
    assert!(stdout(&out).contains("eye opening"));
    assert!(std::fs::read_to_string(&eye).unwrap().lines().count() > 50);
}

#[test]
fn bad_input_fails_with_a_message() {
    let out = bin().args(["sweep", "--preset", "no-such-preset"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let out = bin().args(["robustness", "--config"]).arg(data("tiny.toml")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("launch_power"));

    let out = bin().args(["evaluate", "--params", "/nonexistent/params.toml"]).output().unwrap();
    assert!(!out.status.success());
}
