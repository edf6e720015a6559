//! Voter partisanship: registration, third-party leaning, and Bayesian
//! imputation from demographic likelihoods and precinct vote-share priors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roster::VoterRecord;

/// Add-ε smoothing applied to every precinct prior.
pub const PRIOR_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    Dem,
    Rep,
    Ind,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::Dem, Party::Rep, Party::Ind];

    pub fn index(self) -> usize {
        match self {
            Party::Dem => 0,
            Party::Rep => 1,
            Party::Ind => 2,
        }
    }

    /// Dem <-> Rep; Ind is fixed.
    pub fn swapped(self) -> Party {
        match self {
            Party::Dem => Party::Rep,
            Party::Rep => Party::Dem,
            Party::Ind => Party::Ind,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::Dem => "Dem",
            Party::Rep => "Rep",
            Party::Ind => "Ind",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Dem" => Ok(Party::Dem),
            "Rep" => Ok(Party::Rep),
            "Ind" => Ok(Party::Ind),
            other => Err(Error::Config(format!("unknown party `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorSource {
    Registered,
    ThirdPartyLean,
    Imputed,
}

impl PosteriorSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PosteriorSource::Registered => "registered",
            PosteriorSource::ThirdPartyLean => "third_party_lean",
            PosteriorSource::Imputed => "imputed",
        }
    }
}

impl FromStr for PosteriorSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "registered" => Ok(PosteriorSource::Registered),
            "third_party_lean" => Ok(PosteriorSource::ThirdPartyLean),
            "imputed" => Ok(PosteriorSource::Imputed),
            other => Err(Error::Config(format!("unknown posterior source `{other}`"))),
        }
    }
}

/// Probability triple over (Dem, Rep, Ind).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartisanPosterior {
    pub probs: [f64; 3],
    pub source: PosteriorSource,
}

impl PartisanPosterior {
    pub fn degenerate(party: Party, source: PosteriorSource) -> Self {
        let mut probs = [0.0; 3];
        probs[party.index()] = 1.0;
        PartisanPosterior { probs, source }
    }

    pub fn p(&self, party: Party) -> f64 {
        self.probs[party.index()]
    }

    pub fn p_dem(&self) -> f64 {
        self.probs[0]
    }

    pub fn p_rep(&self) -> f64 {
        self.probs[1]
    }

    pub fn p_ind(&self) -> f64 {
        self.probs[2]
    }

    pub fn is_degenerate(&self) -> bool {
        self.probs.contains(&1.0)
    }

    pub fn swapped(&self) -> Self {
        PartisanPosterior {
            probs: [self.probs[1], self.probs[0], self.probs[2]],
            source: self.source,
        }
    }
}

/// Argmax class. Exact ties resolve in the fixed order Dem, Rep, Ind.
pub fn discretize(posterior: &PartisanPosterior) -> Party {
    let mut best = Party::Dem;
    for party in [Party::Rep, Party::Ind] {
        if posterior.p(party) > posterior.p(best) {
            best = party;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lean {
    DemLean,
    RepLean,
    Unknown,
}

fn normalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Party label -> ideological leaning. Labels absent from the map are `Unknown`.
#[derive(Debug, Clone, Default)]
pub struct ThirdPartyLeanMap {
    leans: HashMap<String, Lean>,
}

const DEM_LEANING: &[&str] = &[
    "Democratic",
    "Green Libertarian",
    "Constitution",
    "Green",
    "Liberal",
    "Progressive",
    "Working Family Party",
    "Peace And Freedom",
    "Socialist",
    "Socialist Labor",
    "Rainbow",
    "Bread And Roses",
    "Worker's Party",
    "Women's Equality Party",
    "Social Democrat",
    "Communist",
    "Independent Democrat",
];

const REP_LEANING: &[&str] = &[
    "Republican",
    "Libertarian",
    "Conservative",
    "American Independent",
    "Constitutional",
    "Independent Republican",
];

const UNKNOWN_LEANING: &[&str] = &[
    "Unknown",
    "Non-Partisan",
    "Registered Independent",
    "Independence",
    "Other",
    "Natural Law",
    "Reform",
    "American",
    "Peoples",
    "Declined To State",
    "Patriot",
    "Consumer",
    "Mountain",
];

impl ThirdPartyLeanMap {
    /// The standard third-party classification table.
    pub fn standard() -> Self {
        let mut map = ThirdPartyLeanMap::default();
        for &l in DEM_LEANING {
            map.insert(l, Lean::DemLean);
        }
        for &l in REP_LEANING {
            map.insert(l, Lean::RepLean);
        }
        for &l in UNKNOWN_LEANING {
            map.insert(l, Lean::Unknown);
        }
        map
    }

    pub fn insert(&mut self, label: &str, lean: Lean) {
        self.leans.insert(normalize_label(label), lean);
    }

    pub fn lean(&self, label: &str) -> Lean {
        classify_third_party(label, self)
    }
}

pub fn classify_third_party(party_label: &str, map: &ThirdPartyLeanMap) -> Lean {
    map.leans
        .get(&normalize_label(party_label))
        .copied()
        .unwrap_or(Lean::Unknown)
}

/// Step one of resolution: a direct Democratic/Republican registration.
pub fn registered_party(party_label: &str) -> Option<Party> {
    match normalize_label(party_label).as_str() {
        "democratic" | "democrat" => Some(Party::Dem),
        "republican" => Some(Party::Rep),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    #[serde(rename = "18-34")]
    A18to34,
    #[serde(rename = "35-50")]
    A35to50,
    #[serde(rename = "51-62")]
    A51to62,
    #[serde(rename = "63+")]
    A63Plus,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [
        AgeGroup::A18to34,
        AgeGroup::A35to50,
        AgeGroup::A51to62,
        AgeGroup::A63Plus,
    ];

    /// `None` below 18; the imputation table does not cover minors.
    pub fn from_age(age: u32) -> Option<Self> {
        match age {
            0..=17 => None,
            18..=34 => Some(AgeGroup::A18to34),
            35..=50 => Some(AgeGroup::A35to50),
            51..=62 => Some(AgeGroup::A51to62),
            _ => Some(AgeGroup::A63Plus),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::A18to34 => "18-34",
            AgeGroup::A35to50 => "35-50",
            AgeGroup::A51to62 => "51-62",
            AgeGroup::A63Plus => "63+",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        AgeGroup::ALL.into_iter().find(|g| g.label() == s.trim())
    }

    /// Inclusive age range covered by the band.
    pub fn range(self) -> (u32, u32) {
        match self {
            AgeGroup::A18to34 => (18, 34),
            AgeGroup::A35to50 => (35, 50),
            AgeGroup::A51to62 => (51, 62),
            AgeGroup::A63Plus => (63, 90),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Demographics {
    pub age: Option<u32>,
    pub gender: Option<String>,
    pub race: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DemoKey {
    pub age_group: AgeGroup,
    pub gender: String,
    pub race: String,
}

impl DemoKey {
    pub fn new(age_group: AgeGroup, gender: &str, race: &str) -> Self {
        DemoKey {
            age_group,
            gender: normalize_label(gender),
            race: normalize_label(race),
        }
    }

    pub fn from_demographics(d: &Demographics) -> Option<Self> {
        let age_group = AgeGroup::from_age(d.age?)?;
        Some(DemoKey::new(age_group, d.gender.as_deref()?, d.race.as_deref()?))
    }
}

/// Pr(X | party) for each demographic cell, plus an optional marginal row
/// used when a voter's cell is missing or unresolvable.
#[derive(Debug, Clone, Default)]
pub struct DemographicLikelihoodTable {
    rows: BTreeMap<DemoKey, [f64; 3]>,
    fallback: Option<[f64; 3]>,
}

fn check_likelihood(l: [f64; 3]) -> Result<[f64; 3]> {
    if l.iter().all(|&p| p.is_finite() && p > 0.0 && p <= 1.0) {
        Ok(l)
    } else {
        Err(Error::Config(format!("likelihoods must lie in (0, 1], got {l:?}")))
    }
}

impl DemographicLikelihoodTable {
    pub fn insert(&mut self, key: DemoKey, likelihood: [f64; 3]) -> Result<()> {
        self.rows.insert(key, check_likelihood(likelihood)?);
        Ok(())
    }

    pub fn set_fallback(&mut self, likelihood: [f64; 3]) -> Result<()> {
        self.fallback = Some(check_likelihood(likelihood)?);
        Ok(())
    }

    pub fn fallback(&self) -> Option<[f64; 3]> {
        self.fallback
    }

    pub fn rows(&self) -> impl Iterator<Item = (&DemoKey, &[f64; 3])> {
        self.rows.iter()
    }

    /// Returns the likelihood row and whether the fallback was used.
    pub fn lookup(&self, demo: &Demographics) -> Result<([f64; 3], bool)> {
        if let Some(row) = DemoKey::from_demographics(demo).and_then(|k| self.rows.get(&k)) {
            return Ok((*row, false));
        }
        self.fallback
            .map(|f| (f, true))
            .ok_or_else(|| Error::NotFound(format!("no likelihood row or fallback for {demo:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecinctRow {
    pub precinct_id: String,
    pub state: String,
    pub share_dem: f64,
    pub share_rep: f64,
    /// Weight for state and global aggregates; 1 when absent.
    pub total_votes: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSource {
    Precinct,
    State,
    Global,
}

/// Smoothed (Dem, Rep, Ind) priors by precinct with state and global fallbacks.
#[derive(Debug, Clone)]
pub struct PrecinctPriors {
    precincts: HashMap<String, [f64; 3]>,
    states: HashMap<String, [f64; 3]>,
    global: [f64; 3],
}

pub fn smooth(shares: [f64; 3], epsilon: f64) -> [f64; 3] {
    let total: f64 = shares.iter().sum::<f64>() + 3.0 * epsilon;
    shares.map(|s| (s + epsilon) / total)
}

impl PrecinctPriors {
    /// The Ind share is the residual 1 - dem - rep plus `nonvoter_mass`,
    /// after which the triple is renormalized and smoothed.
    pub fn from_rows(rows: &[PrecinctRow], nonvoter_mass: f64, epsilon: f64) -> Result<Self> {
        if nonvoter_mass < 0.0 || !nonvoter_mass.is_finite() {
            return Err(Error::Config("nonvoter_mass must be non-negative".into()));
        }
        let mut precincts = HashMap::with_capacity(rows.len());
        let mut state_acc: BTreeMap<&str, ([f64; 3], f64)> = BTreeMap::new();
        let mut global_acc = ([0.0; 3], 0.0);
        for row in rows {
            let (d, r) = (row.share_dem, row.share_rep);
            if !(d.is_finite() && r.is_finite()) || d < 0.0 || r < 0.0 || d + r > 1.0 + 1e-9 {
                return Err(Error::Config(format!(
                    "precinct {}: invalid shares ({d}, {r})",
                    row.precinct_id
                )));
            }
            let ind = (1.0 - d - r).max(0.0) + nonvoter_mass;
            let raw = [d, r, ind];
            let total: f64 = raw.iter().sum();
            let shares = if total > 0.0 {
                raw.map(|s| s / total)
            } else {
                [0.0; 3]
            };
            let w = row.total_votes.unwrap_or(1.0);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!(
                    "precinct {}: invalid total_votes {w}",
                    row.precinct_id
                )));
            }
            let acc = state_acc.entry(&row.state).or_insert(([0.0; 3], 0.0));
            for c in 0..3 {
                acc.0[c] += w * shares[c];
                global_acc.0[c] += w * shares[c];
            }
            acc.1 += w;
            global_acc.1 += w;
            if precincts
                .insert(row.precinct_id.clone(), smooth(shares, epsilon))
                .is_some()
            {
                return Err(Error::DuplicateId(row.precinct_id.clone()));
            }
        }
        let mean = |(sum, w): ([f64; 3], f64)| {
            if w > 0.0 {
                smooth(sum.map(|s| s / w), epsilon)
            } else {
                [1.0 / 3.0; 3]
            }
        };
        let states = state_acc
            .into_iter()
            .map(|(s, acc)| (s.to_string(), mean(acc)))
            .collect();
        Ok(PrecinctPriors {
            precincts,
            states,
            global: mean(global_acc),
        })
    }

    pub fn lookup(&self, precinct_id: Option<&str>, state: &str) -> ([f64; 3], PriorSource) {
        if let Some(p) = precinct_id.and_then(|id| self.precincts.get(id)) {
            return (*p, PriorSource::Precinct);
        }
        match self.states.get(state) {
            Some(s) => (*s, PriorSource::State),
            None => (self.global, PriorSource::Global),
        }
    }
}

/// Bayes rule over the three classes: posterior ∝ likelihood · prior.
pub fn impute_posterior(likelihood: [f64; 3], prior: [f64; 3]) -> Result<PartisanPosterior> {
    let num = [
        likelihood[0] * prior[0],
        likelihood[1] * prior[1],
        likelihood[2] * prior[2],
    ];
    let total: f64 = num.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegeneratePrior);
    }
    let mut probs = num.map(|n| n / total);
    // Pin the sum: assign the rounding residue to the largest entry.
    let resid = 1.0 - probs.iter().sum::<f64>();
    let big = (0..3)
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
        .unwrap_or(0);
    probs[big] += resid;
    Ok(PartisanPosterior {
        probs,
        source: PosteriorSource::Imputed,
    })
}

/// Read-only context for resolving voter partisanship.
#[derive(Debug, Clone)]
pub struct Imputer {
    pub lean_map: ThirdPartyLeanMap,
    pub table: DemographicLikelihoodTable,
    pub priors: PrecinctPriors,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub posterior: PartisanPosterior,
    pub likelihood_fallback: bool,
    pub prior_source: Option<PriorSource>,
}

impl Imputer {
    /// Three steps: direct Dem/Rep registration, third-party leaning, then
    /// Bayesian imputation for everyone else.
    pub fn resolve(&self, voter: &VoterRecord) -> Result<Resolution> {
        let label = voter.party_label.as_deref().unwrap_or("");
        if let Some(party) = registered_party(label) {
            return Ok(Resolution {
                posterior: PartisanPosterior::degenerate(party, PosteriorSource::Registered),
                likelihood_fallback: false,
                prior_source: None,
            });
        }
        match classify_third_party(label, &self.lean_map) {
            Lean::DemLean => Ok(Resolution {
                posterior: PartisanPosterior::degenerate(Party::Dem, PosteriorSource::ThirdPartyLean),
                likelihood_fallback: false,
                prior_source: None,
            }),
            Lean::RepLean => Ok(Resolution {
                posterior: PartisanPosterior::degenerate(Party::Rep, PosteriorSource::ThirdPartyLean),
                likelihood_fallback: false,
                prior_source: None,
            }),
            Lean::Unknown => self.impute(voter),
        }
    }

    /// Step three alone, ignoring the party label.
    pub fn impute(&self, voter: &VoterRecord) -> Result<Resolution> {
        let (likelihood, likelihood_fallback) = self.table.lookup(&voter.demographics)?;
        let (prior, prior_source) = self.priors.lookup(voter.precinct_id.as_deref(), &voter.state);
        Ok(Resolution {
            posterior: impute_posterior(likelihood, prior)?,
            likelihood_fallback,
            prior_source: Some(prior_source),
        })
    }
}

pub fn resolve_partisanship(voter: &VoterRecord, imputer: &Imputer) -> Result<PartisanPosterior> {
    imputer.resolve(voter).map(|r| r.posterior)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldoutAccuracy {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Impute registered Dem/Rep voters as if their party were unknown and
/// score the argmax class against the registration.
pub fn holdout_accuracy<'a, I>(voters: I, imputer: &Imputer) -> Result<HoldoutAccuracy>
where
    I: IntoIterator<Item = &'a VoterRecord>,
{
    let (mut n, mut correct) = (0, 0);
    for v in voters {
        let Some(truth) = v.party_label.as_deref().and_then(registered_party) else {
            continue;
        };
        n += 1;
        if discretize(&imputer.impute(v)?.posterior) == truth {
            correct += 1;
        }
    }
    Ok(HoldoutAccuracy {
        n,
        correct,
        accuracy: if n > 0 { correct as f64 / n as f64 } else { f64::NAN },
    })
}
