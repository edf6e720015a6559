use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use segiso::pipeline::artifact::{file_digest, meta_path, Meta, LOCK_FILE};
use segiso::pipeline::{self, tables, LoadedConfig, PipelineConfig, StageStatus, ARTIFACTS};
use segiso::synth::{self, WorldConfig};
use segiso::Error;

fn small_world(dir: &Path) {
    let cfg = WorldConfig {
        n_voters: 8_000,
        n_states: 2,
        n_accounts: 3_000,
        friends_min: 20,
        friends_max: 40,
        seed: 5,
        ..WorldConfig::default()
    };
    let world = synth::generate(&cfg).unwrap();
    synth::write_world(&world, dir).unwrap();
}

fn small_config() -> PipelineConfig {
    let mut c = pipeline::config_for_world(5);
    c.offline.k = 50;
    c.analysis.bootstrap_resamples = 100;
    c
}

fn statuses(s: &pipeline::RunSummary) -> BTreeMap<String, StageStatus> {
    s.stages.iter().map(|r| (r.stage.clone(), r.status)).collect()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .flatten()
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn run_emits_valid_artifacts_and_rerun_skips() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path());
    let cfg = LoadedConfig::from_config(small_config(), tmp.path());
    let first = pipeline::run(&cfg).unwrap();
    assert!(statuses(&first).values().all(|s| *s == StageStatus::Ran));

    let out = cfg.output_dir();
    for name in ARTIFACTS {
        let p = out.join(name);
        assert!(p.is_file(), "{name} missing");
        let meta: Meta = serde_json::from_slice(&fs::read(meta_path(&p)).unwrap()).unwrap();
        assert_eq!(meta.sha256, file_digest(&p).unwrap(), "{name}");
        assert_eq!(meta.seed, 5);
        assert_eq!(meta.config["offline"]["k"], 50);
    }
    let offline_meta: Meta = serde_json::from_slice(&fs::read(meta_path(&out.join(pipeline::OFFLINE))).unwrap()).unwrap();
    assert_eq!(offline_meta.inputs["voters"], file_digest(&tmp.path().join("voters.csv")).unwrap());

    // Schema re-validation through the documented readers.
    let linked = tables::read_linked(&out.join(pipeline::LINKED)).unwrap();
    assert!(!linked.is_empty());
    assert_eq!(tables::read_posteriors(&out.join(pipeline::POSTERIORS)).unwrap().len(), 8_000);
    assert!(!tables::read_isolation(&out.join(pipeline::OFFLINE)).unwrap().is_empty());
    assert!(!tables::read_isolation(&out.join(pipeline::ONLINE)).unwrap().is_empty());
    assert!(!tables::read_ideology(&out.join(pipeline::IDEOLOGY)).unwrap().is_empty());
    assert!(!tables::read_subgroups(&out.join(pipeline::SUBGROUPS)).unwrap().is_empty());
    segiso::ideology::read_model(&out.join(pipeline::CA_MODEL)).unwrap();
    tables::check_header(&out.join(pipeline::PERCENTILES), tables::PERCENTILE_COLUMNS).unwrap();
    tables::check_header(&out.join(pipeline::BINNED), tables::BINNED_COLUMNS).unwrap();
    tables::check_header(&out.join(pipeline::COVERAGE), tables::COVERAGE_COLUMNS).unwrap();
    let report = pipeline::load_report(&out).unwrap();
    assert_eq!(report["linkage"]["pairs"], linked.len());

    let before = snapshot(&out);
    let second = pipeline::run(&cfg).unwrap();
    assert!(statuses(&second).values().all(|s| *s == StageStatus::Skipped));
    assert_eq!(snapshot(&out), before);
    assert!(!out.join(LOCK_FILE).exists());

    // Changing one input re-runs the stages that read it; later stages are
    // keyed on artifact contents and may legitimately skip.
    let edges = tmp.path().join("edges.csv");
    let mut text = fs::read_to_string(&edges).unwrap();
    let drop_at = text.rfind('\n').unwrap();
    let prev = text[..drop_at].rfind('\n').unwrap();
    text.truncate(prev + 1);
    fs::write(&edges, text).unwrap();
    let third = statuses(&pipeline::run(&cfg).unwrap());
    for s in ["link", "impute", "offline"] {
        assert_eq!(third[s], StageStatus::Skipped, "{s}");
    }
    for s in ["ideology", "online"] {
        assert_eq!(third[s], StageStatus::Ran, "{s}");
    }
}

#[test]
fn failed_stage_keeps_previous_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path());
    let cfg = LoadedConfig::from_config(small_config(), tmp.path());
    pipeline::run(&cfg).unwrap();
    let out = cfg.output_dir();
    let before = snapshot(&out);
    fs::write(tmp.path().join("edges.csv"), "src_account_id,dst_account_id\nA1\n").unwrap();
    let err = pipeline::run(&cfg).unwrap_err();
    assert!(matches!(err, Error::Schema { .. }), "{err}");
    assert_eq!(snapshot(&out), before);
}

#[test]
fn empty_voter_file_is_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path());
    fs::write(
        tmp.path().join("voters.csv"),
        "voter_id,first,last,city,state,lat,lon,party_label,age,gender,race,precinct_id\n",
    )
    .unwrap();
    let cfg = LoadedConfig::from_config(small_config(), tmp.path());
    for err in [pipeline::validate(&cfg).unwrap_err(), pipeline::run(&cfg).unwrap_err()] {
        match err {
            Error::Schema { file, .. } => assert!(file.ends_with("voters.csv"), "{file}"),
            other => panic!("expected schema error, got {other}"),
        }
    }
}

#[test]
fn validate_reports_inputs_and_named_errors() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path());
    let cfg = LoadedConfig::from_config(small_config(), tmp.path());
    let report = pipeline::validate(&cfg).unwrap();
    assert_eq!(report.inputs["voters"], 8_000);
    assert!(!cfg.output_dir().exists(), "validate must not write");

    fs::remove_file(tmp.path().join("precinct_priors.csv")).unwrap();
    let msg = pipeline::validate(&cfg).unwrap_err().to_string();
    assert!(msg.contains("precinct_priors"), "{msg}");
    let msg = pipeline::run(&cfg).unwrap_err().to_string();
    assert!(msg.contains("precinct_priors"), "{msg}");
}

#[test]
fn zero_k_is_range_error() {
    let mut c = small_config();
    c.offline.k = 0;
    let cfg = LoadedConfig::from_config(c, "/nonexistent");
    let err = pipeline::validate(&cfg).unwrap_err();
    assert!(matches!(err, Error::Config(ref m) if m.contains("offline.k")), "{err}");
}

#[test]
fn locked_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path());
    let cfg = LoadedConfig::from_config(small_config(), tmp.path());
    fs::create_dir_all(cfg.output_dir()).unwrap();
    fs::write(cfg.output_dir().join(LOCK_FILE), "").unwrap();
    let msg = pipeline::run(&cfg).unwrap_err().to_string();
    assert!(msg.contains("locked"), "{msg}");
}
