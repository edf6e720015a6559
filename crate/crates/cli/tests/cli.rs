use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn segiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segiso")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_world(dir: &Path) -> String {
    let synth = dir.join("synth.toml");
    fs::write(
        &synth,
        "output_dir = \"world\"\n\n[world]\nn_voters = 6000\nn_states = 2\nn_accounts = 2500\nfriends_min = 20\nfriends_max = 40\nseed = 9\n",
    )
    .unwrap();
    let o = segiso(&["synth", "--config", synth.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("6000 voters"));
    dir.join("world/pipeline.toml").to_string_lossy().into_owned()
}

#[test]
fn synth_validate_run_report() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth_world(tmp.path());
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    let o = segiso(&["validate", "--config", &config]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("voters") && stdout(&o).trim_end().ends_with("ok"));

    let o = segiso(&["run", "--config", &config, "--k", "40", "--output", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("report") && l.ends_with("ran")));

    let o = segiso(&["run", "--config", &config, "--k", "40", "--output", out_s]);
    assert!(o.status.success());
    assert!(!stdout(&o).lines().any(|l| l.ends_with(" ran")), "{}", stdout(&o));

    let o = segiso(&["report", "--output", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).is_empty());

    let o = segiso(&["report", "--output", out_s, "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["panel_medians"]["Dem"]["n"].as_u64().unwrap() > 0);
    assert!(v["subgroups"].as_array().is_some());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth_world(tmp.path());

    let o = segiso(&["run", "--config", &config, "--k", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("offline.k"), "{}", stderr(&o));

    let voters = tmp.path().join("world/voters.csv");
    let header = fs::read_to_string(&voters).unwrap().lines().next().unwrap().to_string();
    fs::write(&voters, header + "\n").unwrap();
    let o = segiso(&["validate", "--config", &config]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("voters.csv"), "{}", stderr(&o));

    let o = segiso(&["report", "--output", tmp.path().join("missing").to_str().unwrap()]);
    assert!(!o.status.success());
}
