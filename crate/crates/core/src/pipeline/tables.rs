//! Schemas of the CSV artifacts passed between stages.

use std::path::Path;

use crate::error::Result;
use crate::ideology::{IdeologyScore, Provenance};
use crate::isolation::{FriendCoverage, IsolationScore};
use crate::linkage::LinkedPair;
use crate::partisan::{discretize, PartisanPosterior, Party, PosteriorSource, PriorSource};
use crate::roster::{csv_bytes, CsvTable};
use crate::stats::{BinnedCurve, PercentileProfile, SubgroupDiff};

pub const LINKED_COLUMNS: &[&str] = &["voter_id", "account_id"];
pub const POSTERIOR_COLUMNS: &[&str] = &[
    "voter_id",
    "p_dem",
    "p_rep",
    "p_ind",
    "party",
    "source",
    "likelihood_fallback",
    "prior_source",
];
pub const ISOLATION_COLUMNS: &[&str] = &["ego_id", "party", "channel", "variant", "k", "value", "n_used"];
pub const IDEOLOGY_COLUMNS: &[&str] = &["account_id", "theta", "n_elites_followed", "provenance", "class"];
pub const COVERAGE_COLUMNS: &[&str] = &["ego_id", "n_friends", "n_scored", "fraction"];
pub const PERCENTILE_COLUMNS: &[&str] = &["group", "n", "percentile", "value"];
pub const BINNED_COLUMNS: &[&str] = &["group", "bin", "lower", "upper", "count", "mean"];
pub const SUBGROUP_COLUMNS: &[&str] = &["key", "n", "median", "ci_low", "ci_high"];

fn prior_source_str(p: Option<PriorSource>) -> &'static str {
    match p {
        Some(PriorSource::Precinct) => "precinct",
        Some(PriorSource::State) => "state",
        Some(PriorSource::Global) => "global",
        None => "",
    }
}

pub fn linked_csv(pairs: &[LinkedPair]) -> Vec<u8> {
    csv_bytes(LINKED_COLUMNS, pairs.iter().map(|p| [&p.voter_id, &p.account_id]))
}

pub fn read_linked(path: &Path) -> Result<Vec<LinkedPair>> {
    let t = CsvTable::read(path, LINKED_COLUMNS)?;
    t.rows()
        .map(|r| {
            Ok(LinkedPair {
                voter_id: r.req("voter_id")?.to_string(),
                account_id: r.req("account_id")?.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRow {
    pub voter_id: String,
    pub posterior: PartisanPosterior,
    pub likelihood_fallback: bool,
    pub prior_source: Option<PriorSource>,
}

pub fn posteriors_csv(rows: &[PosteriorRow]) -> Vec<u8> {
    csv_bytes(
        POSTERIOR_COLUMNS,
        rows.iter().map(|r| {
            let p = &r.posterior;
            vec![
                r.voter_id.clone(),
                p.probs[0].to_string(),
                p.probs[1].to_string(),
                p.probs[2].to_string(),
                discretize(p).as_str().to_string(),
                p.source.as_str().to_string(),
                r.likelihood_fallback.to_string(),
                prior_source_str(r.prior_source).to_string(),
            ]
        }),
    )
}

pub fn read_posteriors(path: &Path) -> Result<Vec<PosteriorRow>> {
    let t = CsvTable::read(path, POSTERIOR_COLUMNS)?;
    t.rows()
        .map(|r| {
            let prior_source = match r.opt("prior_source") {
                None => None,
                Some("precinct") => Some(PriorSource::Precinct),
                Some("state") => Some(PriorSource::State),
                Some("global") => Some(PriorSource::Global),
                Some(o) => return Err(r.error("prior_source", format!("unknown value `{o}`"))),
            };
            Ok(PosteriorRow {
                voter_id: r.req("voter_id")?.to_string(),
                posterior: PartisanPosterior {
                    probs: [r.f64_req("p_dem")?, r.f64_req("p_rep")?, r.f64_req("p_ind")?],
                    source: r.parse_req::<PosteriorSource>("source")?,
                },
                likelihood_fallback: r.parse_req("likelihood_fallback")?,
                prior_source,
            })
        })
        .collect()
}

pub fn isolation_csv(scores: &[IsolationScore]) -> Vec<u8> {
    csv_bytes(
        ISOLATION_COLUMNS,
        scores.iter().map(|s| {
            vec![
                s.ego_id.clone(),
                s.party.as_str().to_string(),
                s.channel.as_str().to_string(),
                s.variant.as_str().to_string(),
                s.k.to_string(),
                s.value.to_string(),
                s.n_used.to_string(),
            ]
        }),
    )
}

pub fn read_isolation(path: &Path) -> Result<Vec<IsolationScore>> {
    let t = CsvTable::read(path, ISOLATION_COLUMNS)?;
    t.rows()
        .map(|r| {
            Ok(IsolationScore {
                ego_id: r.req("ego_id")?.to_string(),
                party: r.parse_req("party")?,
                channel: r.parse_req("channel")?,
                variant: r.parse_req("variant")?,
                k: r.parse_req("k")?,
                value: r.f64_req("value")?,
                n_used: r.parse_req("n_used")?,
            })
        })
        .collect()
}

pub fn ideology_csv(scores: &[(IdeologyScore, Party)]) -> Vec<u8> {
    csv_bytes(
        IDEOLOGY_COLUMNS,
        scores.iter().map(|(s, class)| {
            vec![
                s.account_id.clone(),
                s.theta.to_string(),
                s.n_elites_followed.to_string(),
                s.provenance.as_str().to_string(),
                class.as_str().to_string(),
            ]
        }),
    )
}

pub fn read_ideology(path: &Path) -> Result<Vec<(IdeologyScore, Party)>> {
    let t = CsvTable::read(path, IDEOLOGY_COLUMNS)?;
    t.rows()
        .map(|r| {
            let provenance = match r.req("provenance")? {
                "fitted" => Provenance::Fitted,
                "projected" => Provenance::Projected,
                o => return Err(r.error("provenance", format!("unknown value `{o}`"))),
            };
            Ok((
                IdeologyScore {
                    account_id: r.req("account_id")?.to_string(),
                    theta: r.f64_req("theta")?,
                    n_elites_followed: r.parse_req("n_elites_followed")?,
                    provenance,
                },
                r.parse_req("class")?,
            ))
        })
        .collect()
}

pub fn coverage_csv(rows: &[FriendCoverage]) -> Vec<u8> {
    csv_bytes(
        COVERAGE_COLUMNS,
        rows.iter().map(|c| {
            vec![
                c.ego_id.clone(),
                c.n_friends.to_string(),
                c.n_scored.to_string(),
                c.fraction.map(|f| f.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

pub fn percentiles_csv(profiles: &[PercentileProfile]) -> Vec<u8> {
    csv_bytes(
        PERCENTILE_COLUMNS,
        profiles.iter().flat_map(|p| {
            p.values
                .iter()
                .map(|(q, v)| vec![p.group.clone(), p.n.to_string(), q.to_string(), v.to_string()])
        }),
    )
}

pub fn binned_csv(curves: &[(String, BinnedCurve)]) -> Vec<u8> {
    csv_bytes(
        BINNED_COLUMNS,
        curves.iter().flat_map(|(group, c)| {
            (0..c.counts.len()).map(move |i| {
                vec![
                    group.clone(),
                    i.to_string(),
                    c.edges[i].to_string(),
                    c.edges[i + 1].to_string(),
                    c.counts[i].to_string(),
                    c.means[i].map(|m| m.to_string()).unwrap_or_default(),
                ]
            })
        }),
    )
}

pub fn subgroup_csv(diffs: &[SubgroupDiff]) -> Vec<u8> {
    csv_bytes(
        SUBGROUP_COLUMNS,
        diffs.iter().map(|d| {
            vec![
                d.key.clone(),
                d.n.to_string(),
                d.median.to_string(),
                d.ci_low.to_string(),
                d.ci_high.to_string(),
            ]
        }),
    )
}

pub fn read_subgroups(path: &Path) -> Result<Vec<SubgroupDiff>> {
    let t = CsvTable::read(path, SUBGROUP_COLUMNS)?;
    t.rows()
        .map(|r| {
            Ok(SubgroupDiff {
                key: r.req("key")?.to_string(),
                n: r.parse_req("n")?,
                median: r.f64_req("median")?,
                ci_low: r.f64_req("ci_low")?,
                ci_high: r.f64_req("ci_high")?,
            })
        })
        .collect()
}

/// Re-reads a CSV artifact, checking its header; returns the row count.
pub fn check_header(path: &Path, columns: &[&str]) -> Result<usize> {
    Ok(CsvTable::read(path, columns)?.len())
}
