//! Batch pipeline: link -> impute -> offline -> ideology -> online ->
//! analysis -> report.
//!
//! Each stage reads only input files and artifacts written by earlier
//! stages. A stage is skipped when its digest (version, full config and
//! input contents) matches the last successful run and its outputs are
//! unchanged on disk.

pub mod artifact;
pub mod config;
pub mod tables;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ideology::{self, classify, derive_cutoffs, fit_ca, score_accounts, select_training, TrainingConfig};
use crate::isolation::{online_isolation_batch, OfflineContext, OnlineEgo, SkipReason};
use crate::linkage::{link, NormalizeOptions};
use crate::partisan::{discretize, holdout_accuracy, Imputer, PartisanPosterior, Party, PosteriorSource, PrecinctPriors, ThirdPartyLeanMap};
use crate::roster;
use crate::stats::{self, binned_means, classify_state, percentile_profile, subgroup_split, BootstrapConfig, PanelRow, SplitSpec};

use artifact::{file_digest, meta_path, sha256_hex, to_json_bytes, write_atomic, DirLock, Meta, PipelineState, StageRecord};
pub use config::{LoadedConfig, Overrides, PipelineConfig};
use config::{CutoffMode, EgoPartySource, OfflineEgos};
use tables::PosteriorRow;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const LINKED: &str = "linked_pairs.csv";
pub const LINK_REPORT: &str = "link_report.json";
pub const POSTERIORS: &str = "posteriors.csv";
pub const IMPUTATION_REPORT: &str = "imputation_report.json";
pub const OFFLINE: &str = "offline_isolation.csv";
pub const OFFLINE_REPORT: &str = "offline_report.json";
pub const CA_MODEL: &str = "ca_model.txt";
pub const IDEOLOGY: &str = "ideology_scores.csv";
pub const IDEOLOGY_REPORT: &str = "ideology_report.json";
pub const ONLINE: &str = "online_isolation.csv";
pub const COVERAGE: &str = "friend_coverage.csv";
pub const ONLINE_REPORT: &str = "online_report.json";
pub const PERCENTILES: &str = "percentiles.csv";
pub const BINNED: &str = "binned_curve.csv";
pub const SUBGROUPS: &str = "subgroup_diffs.csv";
pub const REPORT: &str = "report.json";

/// Every artifact a complete run leaves behind, in stage order.
pub const ARTIFACTS: [&str; 16] = [
    LINKED,
    LINK_REPORT,
    POSTERIORS,
    IMPUTATION_REPORT,
    OFFLINE,
    OFFLINE_REPORT,
    CA_MODEL,
    IDEOLOGY,
    IDEOLOGY_REPORT,
    ONLINE,
    COVERAGE,
    ONLINE_REPORT,
    PERCENTILES,
    BINNED,
    SUBGROUPS,
    REPORT,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRun {
    pub stage: String,
    pub status: StageStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub stages: Vec<StageRun>,
}

type Outputs = Vec<(&'static str, Vec<u8>)>;

/// Named input: either a configured input file or an upstream artifact.
struct StageInput {
    name: String,
    path: PathBuf,
}

struct Runner<'a> {
    cfg: &'a LoadedConfig,
    out: PathBuf,
    state: PipelineState,
    config_json: Value,
    config_hash: String,
    runs: Vec<StageRun>,
}

impl Runner<'_> {
    fn input(&self, name: &str, path: &Path) -> StageInput {
        StageInput {
            name: name.to_string(),
            path: self.cfg.resolve(path),
        }
    }

    fn artifact(&self, name: &str) -> StageInput {
        StageInput {
            name: name.to_string(),
            path: self.out.join(name),
        }
    }

    fn stage(&mut self, name: &str, inputs: &[StageInput], compute: impl FnOnce() -> Result<Outputs>) -> Result<()> {
        let mut digests = BTreeMap::new();
        for i in inputs {
            digests.insert(i.name.clone(), file_digest(&i.path)?);
        }
        let digest = sha256_hex(
            json!({
                "stage": name,
                "version": VERSION,
                "config_hash": self.config_hash,
                "inputs": digests,
            })
            .to_string()
            .as_bytes(),
        );
        if self.state.is_fresh(&self.out, name, &digest) {
            self.runs.push(StageRun {
                stage: name.to_string(),
                status: StageStatus::Skipped,
            });
            return Ok(());
        }
        let outputs = compute()?;
        let mut record = StageRecord {
            digest,
            outputs: BTreeMap::new(),
        };
        for (file, bytes) in outputs {
            let path = self.out.join(file);
            let sha = sha256_hex(&bytes);
            write_atomic(&path, &bytes)?;
            let meta = Meta {
                artifact: file.to_string(),
                stage: name.to_string(),
                version: VERSION.to_string(),
                config_hash: self.config_hash.clone(),
                seed: self.cfg.config.seed,
                config: self.config_json.clone(),
                inputs: digests.clone(),
                sha256: sha.clone(),
            };
            let meta_bytes = to_json_bytes(&meta);
            let mpath = meta_path(&path);
            write_atomic(&mpath, &meta_bytes)?;
            record.outputs.insert(file.to_string(), sha);
            record.outputs.insert(
                mpath.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                sha256_hex(&meta_bytes),
            );
        }
        self.state.stages.insert(name.to_string(), record);
        self.state.save(&self.out)?;
        self.runs.push(StageRun {
            stage: name.to_string(),
            status: StageStatus::Ran,
        });
        Ok(())
    }
}

/// Config as recorded in sidecars. The output location is left out so that
/// identical runs into different directories produce identical bytes.
pub fn recorded_config(config: &PipelineConfig) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.remove("output_dir");
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Input name -> data row count.
    pub inputs: BTreeMap<String, usize>,
}

fn named(name: &str, path: &Path, e: Error) -> Error {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Config(format!("input `{name}` not found: {}", path.display()))
        }
        other => other,
    }
}

/// Config range checks plus full schema validation of every input, with
/// no computation.
pub fn validate(cfg: &LoadedConfig) -> Result<ValidationReport> {
    let c = &cfg.config;
    c.check()?;
    let i = &c.inputs;
    let mut counts = BTreeMap::new();
    let p = cfg.resolve(&i.voters);
    counts.insert("voters".into(), roster::read_voters(&p).map_err(|e| named("voters", &p, e))?.len());
    let p = cfg.resolve(&i.accounts);
    counts.insert("accounts".into(), roster::read_accounts(&p).map_err(|e| named("accounts", &p, e))?.len());
    let p = cfg.resolve(&i.edges);
    counts.insert("edges".into(), roster::read_edges(&p).map_err(|e| named("edges", &p, e))?.len());
    let p = cfg.resolve(&i.elites);
    counts.insert("elites".into(), roster::read_elites(&p).map_err(|e| named("elites", &p, e))?.len());
    let p = cfg.resolve(&i.precinct_priors);
    let rows = roster::read_precinct_priors(&p).map_err(|e| named("precinct_priors", &p, e))?;
    PrecinctPriors::from_rows(&rows, c.imputation.nonvoter_mass, c.imputation.epsilon)?;
    counts.insert("precinct_priors".into(), rows.len());
    let p = cfg.resolve(&i.likelihood_table);
    let table = roster::read_likelihood_table(&p).map_err(|e| named("likelihood_table", &p, e))?;
    counts.insert("likelihood_table".into(), table.rows().count() + usize::from(table.fallback().is_some()));
    if let Some(sr) = &i.state_results {
        let p = cfg.resolve(sr);
        counts.insert(
            "state_results".into(),
            roster::read_state_results(&p).map_err(|e| named("state_results", &p, e))?.len(),
        );
    }
    Ok(ValidationReport { inputs: counts })
}

fn check_inputs_exist(cfg: &LoadedConfig) -> Result<()> {
    let i = &cfg.config.inputs;
    let mut all = vec![
        ("voters", &i.voters),
        ("accounts", &i.accounts),
        ("edges", &i.edges),
        ("elites", &i.elites),
        ("precinct_priors", &i.precinct_priors),
        ("likelihood_table", &i.likelihood_table),
    ];
    if let Some(sr) = &i.state_results {
        all.push(("state_results", sr));
    }
    for (name, p) in all {
        let path = cfg.resolve(p);
        if !path.is_file() {
            return Err(Error::Config(format!("input `{name}` not found: {}", path.display())));
        }
    }
    Ok(())
}

pub fn run(cfg: &LoadedConfig) -> Result<RunSummary> {
    cfg.config.check()?;
    check_inputs_exist(cfg)?;
    let out = cfg.output_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let _lock = DirLock::acquire(&out)?;
    let config_json = recorded_config(&cfg.config);
    let config_hash = sha256_hex(config_json.to_string().as_bytes());
    let mut r = Runner {
        cfg,
        state: PipelineState::load(&out),
        out: out.clone(),
        config_json,
        config_hash,
        runs: Vec::new(),
    };
    let c = &cfg.config;
    let i = &c.inputs;

    let ins = [r.input("voters", &i.voters), r.input("accounts", &i.accounts)];
    r.stage("link", &ins, || stage_link(c, &ins[0].path, &ins[1].path))?;

    let ins = [
        r.input("voters", &i.voters),
        r.input("precinct_priors", &i.precinct_priors),
        r.input("likelihood_table", &i.likelihood_table),
    ];
    r.stage("impute", &ins, || stage_impute(c, &ins[0].path, &ins[1].path, &ins[2].path))?;

    let ins = [r.input("voters", &i.voters), r.artifact(POSTERIORS), r.artifact(LINKED)];
    r.stage("offline", &ins, || stage_offline(c, &ins[0].path, &ins[1].path, &ins[2].path))?;

    let ins = [
        r.input("edges", &i.edges),
        r.input("elites", &i.elites),
        r.artifact(POSTERIORS),
        r.artifact(LINKED),
    ];
    r.stage("ideology", &ins, || stage_ideology(c, &ins[0].path, &ins[1].path, &ins[2].path, &ins[3].path))?;

    let ins = [
        r.input("edges", &i.edges),
        r.input("accounts", &i.accounts),
        r.artifact(LINKED),
        r.artifact(POSTERIORS),
        r.artifact(IDEOLOGY),
    ];
    r.stage("online", &ins, || {
        stage_online(c, &ins[0].path, &ins[1].path, &ins[2].path, &ins[3].path, &ins[4].path)
    })?;

    let mut ins = vec![r.artifact(OFFLINE), r.artifact(ONLINE), r.input("voters", &i.voters)];
    if let Some(sr) = &i.state_results {
        ins.push(r.input("state_results", sr));
    }
    r.stage("analysis", &ins, || {
        stage_analysis(c, &ins[0].path, &ins[1].path, &ins[2].path, ins.get(3).map(|s| s.path.as_path()))
    })?;

    let ins: Vec<StageInput> = [
        LINK_REPORT,
        IMPUTATION_REPORT,
        OFFLINE_REPORT,
        IDEOLOGY_REPORT,
        ONLINE_REPORT,
        OFFLINE,
        ONLINE,
        SUBGROUPS,
    ]
    .iter()
    .map(|a| r.artifact(a))
    .collect();
    r.stage("report", &ins, || stage_report(&ins))?;

    Ok(RunSummary {
        output_dir: out,
        stages: r.runs,
    })
}

fn stage_link(c: &PipelineConfig, voters: &Path, accounts: &Path) -> Result<Outputs> {
    let voters = roster::read_voters(voters)?;
    let accounts = roster::read_accounts(accounts)?;
    let opts = NormalizeOptions {
        strip_punctuation: c.imputation.strip_punctuation,
    };
    let (pairs, report) = link(&voters, &accounts, opts);
    Ok(vec![(LINKED, tables::linked_csv(&pairs)), (LINK_REPORT, to_json_bytes(&report))])
}

fn stage_impute(c: &PipelineConfig, voters: &Path, priors: &Path, table: &Path) -> Result<Outputs> {
    let voters = roster::read_voters(voters)?;
    let prior_rows = roster::read_precinct_priors(priors)?;
    let imputer = Imputer {
        lean_map: ThirdPartyLeanMap::standard(),
        table: roster::read_likelihood_table(table)?,
        priors: PrecinctPriors::from_rows(&prior_rows, c.imputation.nonvoter_mass, c.imputation.epsilon)?,
    };
    let rows: Vec<PosteriorRow> = voters
        .par_iter()
        .map(|v| {
            imputer.resolve(v).map(|res| PosteriorRow {
                voter_id: v.voter_id.clone(),
                posterior: res.posterior,
                likelihood_fallback: res.likelihood_fallback,
                prior_source: res.prior_source,
            })
        })
        .collect::<Result<_>>()?;
    let holdout = holdout_accuracy(&voters, &imputer)?;
    let mut by_source: BTreeMap<&str, usize> = BTreeMap::new();
    let mut by_party: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        *by_source.entry(r.posterior.source.as_str()).or_default() += 1;
        *by_party.entry(discretize(&r.posterior).as_str()).or_default() += 1;
    }
    let report = json!({
        "voters": rows.len(),
        "by_source": by_source,
        "by_discrete_party": by_party,
        "likelihood_fallback": rows.iter().filter(|r| r.likelihood_fallback).count(),
        "holdout": holdout,
    });
    Ok(vec![(POSTERIORS, tables::posteriors_csv(&rows)), (IMPUTATION_REPORT, to_json_bytes(&report))])
}

fn posterior_map(path: &Path) -> Result<HashMap<String, PartisanPosterior>> {
    Ok(tables::read_posteriors(path)?
        .into_iter()
        .map(|r| (r.voter_id, r.posterior))
        .collect())
}

fn skip_counts(skipped: &[(String, SkipReason)]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for (_, r) in skipped {
        *m.entry(r.as_str()).or_default() += 1;
    }
    m
}

fn stage_offline(c: &PipelineConfig, voters: &Path, posteriors: &Path, linked: &Path) -> Result<Outputs> {
    let voters = roster::read_voters(voters)?;
    let posts = posterior_map(posteriors)?;
    let ctx = OfflineContext::new(&voters, &posts)?;
    let mut egos: Vec<String> = match c.offline.egos {
        OfflineEgos::Linked => tables::read_linked(linked)?.into_iter().map(|p| p.voter_id).collect(),
        OfflineEgos::All => voters.iter().map(|v| v.voter_id.clone()).collect(),
    };
    egos.sort();
    let batch = ctx.isolation_batch(&egos, c.offline.k, c.offline.variant)?;
    let report = json!({
        "egos": egos.len(),
        "scored": batch.scores.len(),
        "truncated": batch.truncated,
        "skipped": skip_counts(&batch.skipped),
        "k": c.offline.k,
        "variant": c.offline.variant.as_str(),
    });
    Ok(vec![(OFFLINE, tables::isolation_csv(&batch.scores)), (OFFLINE_REPORT, to_json_bytes(&report))])
}

fn stage_ideology(c: &PipelineConfig, edges: &Path, elites: &Path, posteriors: &Path, linked: &Path) -> Result<Outputs> {
    let edges = roster::read_edges(edges)?;
    let elites = roster::read_elites(elites)?;
    let ic = &c.ideology;
    let training = select_training(
        &edges,
        &elites,
        &TrainingConfig {
            min_elites: ic.min_training_elites,
            size: ic.training_size,
            min_pool: ic.min_training_pool,
            seed: c.seed,
        },
    )?;
    let fit = fit_ca(&training, ic.dims, &elites)?;
    let scored = score_accounts(&fit, &edges, &elites, ic.min_projection_elites);

    let posts = posterior_map(posteriors)?;
    let account_party: HashMap<String, Party> = tables::read_linked(linked)?
        .into_iter()
        .filter_map(|p| {
            let post = posts.get(&p.voter_id)?;
            (post.source == PosteriorSource::Registered).then(|| (p.account_id, discretize(post)))
        })
        .collect();
    let (mut dem, mut rep) = (Vec::new(), Vec::new());
    for s in &scored.scores {
        match account_party.get(&s.account_id) {
            Some(Party::Dem) => dem.push(s.theta),
            Some(Party::Rep) => rep.push(s.theta),
            _ => {}
        }
    }
    let cutoffs = match ic.cutoff_mode {
        CutoffMode::Derive => derive_cutoffs(&dem, &rep)?,
        CutoffMode::Fixed => ic.fixed_cutoffs,
    };
    let classed: Vec<_> = scored
        .scores
        .iter()
        .map(|s| (s.clone(), classify(s.theta, &cutoffs)))
        .collect();
    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, cl) in &classed {
        *by_class.entry(cl.as_str()).or_default() += 1;
    }
    let fitted = scored
        .scores
        .iter()
        .filter(|s| s.provenance == ideology::Provenance::Fitted)
        .count();
    let report = json!({
        "training_rows": training.n_rows(),
        "elites_in_model": fit.model.col_ids.len(),
        "dims": fit.model.dims(),
        "singular_values": fit.model.singular_values,
        "warnings": fit.warnings,
        "cutoff_mode": match ic.cutoff_mode { CutoffMode::Derive => "derive", CutoffMode::Fixed => "fixed" },
        "cutoffs": cutoffs,
        "calibration_users": { "Dem": dem.len(), "Rep": rep.len() },
        "scored_accounts": scored.scores.len(),
        "fitted": fitted,
        "projected": scored.scores.len() - fitted,
        "below_threshold": scored.below_threshold,
        "by_class": by_class,
    });
    Ok(vec![
        (CA_MODEL, ideology::write_model(&fit.model)),
        (IDEOLOGY, tables::ideology_csv(&classed)),
        (IDEOLOGY_REPORT, to_json_bytes(&report)),
    ])
}

fn stage_online(
    c: &PipelineConfig,
    edges: &Path,
    accounts: &Path,
    linked: &Path,
    posteriors: &Path,
    ideology: &Path,
) -> Result<Outputs> {
    let edges = roster::read_edges(edges)?;
    let accounts = roster::read_accounts(accounts)?;
    let account_ids: HashSet<&str> = accounts.iter().map(|a| a.account_id.as_str()).collect();
    let linked = tables::read_linked(linked)?;
    let posts = posterior_map(posteriors)?;
    let classes: HashMap<String, Party> = tables::read_ideology(ideology)?
        .into_iter()
        .map(|(s, cl)| (s.account_id, cl))
        .collect();

    let egos_accounts: HashSet<&str> = linked.iter().map(|p| p.account_id.as_str()).collect();
    let mut friends: HashMap<String, Vec<String>> = HashMap::new();
    for e in &edges {
        if e.src != e.dst && egos_accounts.contains(e.src.as_str()) && account_ids.contains(e.dst.as_str()) {
            friends.entry(e.src.clone()).or_default().push(e.dst.clone());
        }
    }
    for list in friends.values_mut() {
        list.sort();
        list.dedup();
    }

    let mut egos = Vec::new();
    let mut pre_skipped = Vec::new();
    for p in &linked {
        let party = match c.online.ego_party {
            EgoPartySource::VoterFile => posts.get(&p.voter_id).map(discretize),
            EgoPartySource::Ideology => classes.get(&p.account_id).copied(),
        };
        match party {
            Some(party) => egos.push(OnlineEgo {
                ego_id: p.voter_id.clone(),
                account_id: p.account_id.clone(),
                party,
            }),
            None => pre_skipped.push((p.voter_id.clone(), SkipReason::NoPosterior)),
        }
    }
    egos.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));
    let mut batch = online_isolation_batch(&egos, &friends, &classes, c.online.min_scored);
    batch.result.skipped.extend(pre_skipped);
    batch.result.skipped.sort();
    let report = json!({
        "egos": linked.len(),
        "scored": batch.result.scores.len(),
        "skipped": skip_counts(&batch.result.skipped),
        "min_scored": c.online.min_scored,
        "pooled_scored_fraction": batch.pooled_fraction(),
        "mean_scored_fraction": batch.mean_fraction(),
    });
    Ok(vec![
        (ONLINE, tables::isolation_csv(&batch.result.scores)),
        (COVERAGE, tables::coverage_csv(&batch.coverage)),
        (ONLINE_REPORT, to_json_bytes(&report)),
    ])
}

/// Egos scored on both channels with the same party.
fn panel_pairs(offline: &Path, online: &Path) -> Result<Vec<(String, Party, f64, f64)>> {
    let on: HashMap<String, (Party, f64)> = tables::read_isolation(online)?
        .into_iter()
        .map(|s| (s.ego_id, (s.party, s.value)))
        .collect();
    let mut out: Vec<_> = tables::read_isolation(offline)?
        .into_iter()
        .filter_map(|s| {
            let &(party, v) = on.get(&s.ego_id)?;
            (party == s.party).then_some((s.ego_id, party, s.value, v))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn stage_analysis(
    c: &PipelineConfig,
    offline: &Path,
    online: &Path,
    voters: &Path,
    state_results: Option<&Path>,
) -> Result<Outputs> {
    let panel = panel_pairs(offline, online)?;
    let a = &c.analysis;
    let mut profiles = Vec::new();
    let mut curves = Vec::new();
    for party in [Party::Dem, Party::Rep] {
        let rows: Vec<_> = panel.iter().filter(|r| r.1 == party).collect();
        if rows.is_empty() {
            continue;
        }
        let off: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let on: Vec<f64> = rows.iter().map(|r| r.3).collect();
        profiles.push(percentile_profile(&format!("{party}/offline"), &off, &a.percentiles)?);
        profiles.push(percentile_profile(&format!("{party}/online"), &on, &a.percentiles)?);
        curves.push((party.as_str().to_string(), binned_means(&off, &on, a.bins)?));
    }

    let voters: HashMap<String, roster::VoterRecord> = roster::read_voters(voters)?
        .into_iter()
        .map(|v| (v.voter_id.clone(), v))
        .collect();
    let state_types: HashMap<String, stats::StateType> = match state_results {
        Some(p) => roster::read_state_results(p)?
            .into_iter()
            .map(|s| (s.state, classify_state(s.share_dem, s.share_rep, a.swing_margin)))
            .collect(),
        None => HashMap::new(),
    };
    let rows: Vec<PanelRow> = panel
        .iter()
        .filter_map(|(id, party, off, on)| {
            let v = voters.get(id)?;
            Some(PanelRow {
                ego_id: id.clone(),
                party: *party,
                offline: *off,
                online: *on,
                gender: v.demographics.gender.clone(),
                race: v.demographics.race.clone(),
                age: v.demographics.age,
                state: v.state.clone(),
            })
        })
        .collect();
    let dims = c.dimensions()?;
    let spec = SplitSpec {
        dimensions: &dims,
        age_bands: &a.age_bands,
        state_types: &state_types,
    };
    let boot = BootstrapConfig {
        resamples: a.bootstrap_resamples,
        level: a.level,
        seed: c.seed,
    };
    let diffs = subgroup_split(&rows, &spec, &boot)?;
    Ok(vec![
        (PERCENTILES, tables::percentiles_csv(&profiles)),
        (BINNED, tables::binned_csv(&curves)),
        (SUBGROUPS, tables::subgroup_csv(&diffs)),
    ])
}

fn read_json(path: &Path) -> Result<Value> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::schema(path.display().to_string(), 1, "", e.to_string()))
}

fn stage_report(ins: &[StageInput]) -> Result<Outputs> {
    let path = |name: &str| &ins.iter().find(|i| i.name == name).expect("declared input").path;
    let panel = panel_pairs(path(OFFLINE), path(ONLINE))?;
    let mut medians = serde_json::Map::new();
    for party in [Party::Dem, Party::Rep] {
        let off: Vec<f64> = panel.iter().filter(|r| r.1 == party).map(|r| r.2).collect();
        let on: Vec<f64> = panel.iter().filter(|r| r.1 == party).map(|r| r.3).collect();
        if off.is_empty() {
            continue;
        }
        medians.insert(
            party.as_str().into(),
            json!({ "n": off.len(), "offline": stats::median(&off)?, "online": stats::median(&on)? }),
        );
    }
    let report = json!({
        "version": VERSION,
        "linkage": read_json(path(LINK_REPORT))?,
        "imputation": read_json(path(IMPUTATION_REPORT))?,
        "offline": read_json(path(OFFLINE_REPORT))?,
        "ideology": read_json(path(IDEOLOGY_REPORT))?,
        "online": read_json(path(ONLINE_REPORT))?,
        "panel_medians": medians,
        "subgroups": tables::read_subgroups(path(SUBGROUPS))?,
    });
    Ok(vec![(REPORT, to_json_bytes(&report))])
}

/// Reads `report.json` from an output directory.
pub fn load_report(output_dir: &Path) -> Result<Value> {
    read_json(&output_dir.join(REPORT))
}

pub fn report_json(report: &Value) -> String {
    String::from_utf8(to_json_bytes(report)).expect("json is utf-8")
}

/// Short human-readable summary of a report.
pub fn render_summary(report: &Value) -> String {
    let mut s = String::new();
    let get = |path: &[&str]| {
        path.iter()
            .try_fold(report, |v, k| v.get(k))
            .map(|v| v.to_string())
            .unwrap_or_else(|| "-".into())
    };
    s.push_str(&format!("linked pairs:        {}\n", get(&["linkage", "pairs"])));
    s.push_str(&format!("holdout accuracy:    {}\n", get(&["imputation", "holdout", "accuracy"])));
    s.push_str(&format!(
        "offline scored:      {} (skipped {})\n",
        get(&["offline", "scored"]),
        get(&["offline", "skipped"])
    ));
    s.push_str(&format!("cutoffs:             {}\n", get(&["ideology", "cutoffs"])));
    s.push_str(&format!(
        "online scored:       {} (skipped {})\n",
        get(&["online", "scored"]),
        get(&["online", "skipped"])
    ));
    s.push_str(&format!("scored friends:      {}\n", get(&["online", "pooled_scored_fraction"])));
    for party in ["Dem", "Rep"] {
        s.push_str(&format!(
            "{party} median offline/online: {} / {} (n={})\n",
            get(&["panel_medians", party, "offline"]),
            get(&["panel_medians", party, "online"]),
            get(&["panel_medians", party, "n"])
        ));
    }
    if let Some(subs) = report.get("subgroups").and_then(Value::as_array) {
        for d in subs.iter().filter(|d| d["key"].as_str().is_some_and(|k| !k.contains(';'))) {
            s.push_str(&format!(
                "{}: median diff {} [{}, {}]\n",
                d["key"].as_str().unwrap_or(""),
                d["median"],
                d["ci_low"],
                d["ci_high"]
            ));
        }
    }
    s
}

/// Pipeline config pointing at a world written by [`crate::synth::write_world`]
/// in the same directory.
pub fn config_for_world(seed: u64) -> PipelineConfig {
    PipelineConfig {
        seed,
        ..PipelineConfig::default()
    }
}
