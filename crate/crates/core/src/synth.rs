//! Synthetic worlds with known ground truth.
//!
//! Geography: each state is a 1 x 1 degree patch split into a 12 x 12 grid
//! of precincts. The grid is further grouped into 4 x 4 party regions of
//! 3 x 3 precincts each, labeled in proportion to the state's party mix.
//! A voter lands uniformly inside a region of their own party with
//! probability `spatial_homophily`, and uniformly anywhere in the state
//! otherwise. The generative party share of every precinct therefore has a
//! closed form, recorded in the truth sidecar.
//!
//! Networks: accounts are drawn from voters. Engaged accounts follow each
//! elite with probability `q_in` (same party), `q_in / follow_homophily`
//! (other party) or their midpoint (independents). Friend choices weight the
//! ego's own party by `friend_homophily`.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::ideology::FollowMatrix;
use crate::partisan::{AgeGroup, DemoKey, DemographicLikelihoodTable, Demographics, Party, PrecinctRow};
use crate::roster::{self, AnchorSide, Elite, FollowEdge, SocialAccount, StateResult, VoterRecord};

const GRID: usize = 12;
const REGION: usize = 3;
const REGIONS_PER_SIDE: usize = GRID / REGION;
const N_REGIONS: usize = REGIONS_PER_SIDE * REGIONS_PER_SIDE;
pub const GENDERS: [&str; 2] = ["F", "M"];
pub const RACES: [&str; 5] = ["white", "black", "hispanic", "asian", "other"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_voters: usize,
    pub n_states: usize,
    /// Probability that a voter is placed inside a region of their own party.
    pub spatial_homophily: f64,
    /// (Dem, Rep, Ind) population shares.
    pub party_mix: [f64; 3],
    /// Per-state shift of the Dem share (and opposite shift of Rep) cycling
    /// through -tilt, 0, +tilt.
    pub state_tilt: f64,
    pub registered_fraction: f64,
    /// Share of registered Dem/Rep voters carrying a leaning third-party label.
    pub third_party_fraction: f64,
    /// Weight of the party-specific component in demographic distributions.
    pub demographic_signal: f64,
    pub missing_demographics: f64,
    pub n_elites_per_party: usize,
    pub q_in: f64,
    pub follow_homophily: f64,
    /// Friend-choice ratio; falls back to `follow_homophily`.
    pub friend_homophily: Option<f64>,
    /// Fraction of accounts that follow enough elites to be scored.
    pub scoreability: f64,
    pub n_accounts: usize,
    pub linkable_fraction: f64,
    pub friends_min: usize,
    pub friends_max: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_voters: 100_000,
            n_states: 4,
            spatial_homophily: 0.8,
            party_mix: [0.45, 0.45, 0.10],
            state_tilt: 0.05,
            registered_fraction: 0.6,
            third_party_fraction: 0.02,
            demographic_signal: 0.6,
            missing_demographics: 0.05,
            n_elites_per_party: 50,
            q_in: 0.3,
            follow_homophily: 5.0,
            friend_homophily: Some(2.0),
            scoreability: 0.3,
            n_accounts: 25_000,
            linkable_fraction: 0.8,
            friends_min: 50,
            friends_max: 110,
            seed: 1,
        }
    }
}

impl WorldConfig {
    pub fn friend_ratio(&self) -> f64 {
        self.friend_homophily.unwrap_or(self.follow_homophily)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        prob("spatial_homophily", self.spatial_homophily)?;
        prob("registered_fraction", self.registered_fraction)?;
        prob("third_party_fraction", self.third_party_fraction)?;
        prob("demographic_signal", self.demographic_signal)?;
        prob("missing_demographics", self.missing_demographics)?;
        prob("q_in", self.q_in)?;
        prob("scoreability", self.scoreability)?;
        prob("linkable_fraction", self.linkable_fraction)?;
        for (i, &m) in self.party_mix.iter().enumerate() {
            prob(&format!("party_mix[{i}]"), m)?;
        }
        if (self.party_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("party_mix must sum to 1".into()));
        }
        if self.state_tilt < 0.0 || self.state_tilt > self.party_mix[0].min(self.party_mix[1]) {
            return Err(Error::Config("state_tilt must keep shares in [0, 1]".into()));
        }
        for (name, n) in [
            ("n_voters", self.n_voters),
            ("n_states", self.n_states),
            ("n_elites_per_party", self.n_elites_per_party),
            ("n_accounts", self.n_accounts),
        ] {
            if n == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n_accounts > self.n_voters {
            return Err(Error::Config("n_accounts cannot exceed n_voters".into()));
        }
        if self.friends_min > self.friends_max {
            return Err(Error::Config("friends_min exceeds friends_max".into()));
        }
        if !(self.follow_homophily >= 1.0) || !(self.friend_ratio() > 0.0) {
            return Err(Error::Config("homophily ratios must be >= 1 (follow) and > 0 (friend)".into()));
        }
        Ok(())
    }
}

/// `segiso synth` config file: where to write and what to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Relative to the config file's directory.
    pub output_dir: PathBuf,
    pub world: WorldConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            output_dir: "world".into(),
            world: WorldConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Per-voter ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub voter_id: String,
    pub party: Party,
    pub account_id: Option<String>,
    pub linkable: bool,
    pub engaged: bool,
    /// Generative share of the voter's own party in their precinct.
    pub expected_offline: f64,
    /// Expected share of friends from the ego's own party.
    pub expected_online: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub voters: Vec<VoterRecord>,
    pub accounts: Vec<SocialAccount>,
    pub elites: Vec<Elite>,
    pub edges: Vec<FollowEdge>,
    pub precincts: Vec<PrecinctRow>,
    pub likelihood: DemographicLikelihoodTable,
    pub state_results: Vec<StateResult>,
    pub truth: Vec<TruthRow>,
    /// Generative (Dem, Rep, Ind) probabilities per precinct id.
    pub generative_priors: BTreeMap<String, [f64; 3]>,
}

struct StateLayout {
    id: String,
    lat0: f64,
    lon0: f64,
    mix: [f64; 3],
    region_party: [Party; N_REGIONS],
}

fn state_id(s: usize) -> String {
    format!("S{s:02}")
}

fn precinct_id(state: &str, row: usize, col: usize) -> String {
    format!("{state}-P{row:02}{col:02}")
}

/// Largest-remainder allocation of `total` slots by `weights`.
fn apportion(weights: [f64; 3], total: usize) -> [usize; 3] {
    let raw: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut out = [0usize; 3];
    for i in 0..3 {
        out[i] = raw[i].floor() as usize;
    }
    let mut rest: Vec<usize> = (0..3).collect();
    rest.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let mut left = total - out.iter().sum::<usize>();
    for &i in rest.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

impl StateLayout {
    fn regions_of(&self, party: Party) -> Vec<usize> {
        (0..N_REGIONS).filter(|&r| self.region_party[r] == party).collect()
    }

    /// Generative party probabilities for a point in region `r`.
    fn generative(&self, r: usize, h: f64) -> [f64; 3] {
        let mut f = [0.0; 3];
        for p in Party::ALL {
            let own = self.regions_of(p).len();
            let clustered = if own == 0 {
                h / N_REGIONS as f64
            } else if self.region_party[r] == p {
                h / own as f64
            } else {
                0.0
            };
            f[p.index()] = self.mix[p.index()] * (clustered + (1.0 - h) / N_REGIONS as f64);
        }
        let total: f64 = f.iter().sum();
        f.map(|x| x / total)
    }
}

fn syllable_names(n: usize, seed_offset: usize) -> Vec<String> {
    const A: [&str; 20] = [
        "ka", "ren", "mo", "li", "sa", "tor", "vi", "del", "an", "bru", "cel", "da", "fi", "gor", "ha", "jo", "ki",
        "lu", "mar", "no",
    ];
    const B: [&str; 16] = [
        "na", "son", "ley", "ra", "vin", "ton", "ric", "ette", "mond", "is", "wen", "dra", "lo", "field", "ski", "ma",
    ];
    const C: [&str; 8] = ["", "r", "n", "s", "th", "ck", "l", "x"];
    (0..n)
        .map(|i| {
            let i = i + seed_offset;
            let mut s = format!("{}{}{}", A[i % 20], B[(i / 20) % 16], C[(i / 320) % 8]);
            if let Some(first) = s.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            s
        })
        .collect()
}

fn demographic_cells() -> Vec<(AgeGroup, &'static str, &'static str)> {
    let mut cells = Vec::new();
    for g in AgeGroup::ALL {
        for gender in GENDERS {
            for race in RACES {
                cells.push((g, gender, race));
            }
        }
    }
    cells
}

pub fn generate(cfg: &WorldConfig) -> Result<World> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = cfg.spatial_homophily;

    let states: Vec<StateLayout> = (0..cfg.n_states)
        .map(|s| {
            let shift = cfg.state_tilt * ((s % 3) as f64 - 1.0);
            let mix = [cfg.party_mix[0] + shift, cfg.party_mix[1] - shift, cfg.party_mix[2]];
            let counts = apportion(mix, N_REGIONS);
            let mut labels: Vec<Party> = Party::ALL
                .iter()
                .flat_map(|&p| std::iter::repeat_n(p, counts[p.index()]))
                .collect();
            labels.shuffle(&mut rng);
            let mut region_party = [Party::Ind; N_REGIONS];
            region_party.copy_from_slice(&labels);
            StateLayout {
                id: state_id(s),
                lat0: 30.0 + 2.0 * (s / 10) as f64,
                lon0: -120.0 + 2.0 * (s % 10) as f64,
                mix,
                region_party,
            }
        })
        .collect();

    let cells = demographic_cells();
    let mut cell_weights = [vec![0.0; cells.len()], vec![0.0; cells.len()], vec![0.0; cells.len()]];
    for w in cell_weights.iter_mut() {
        let raw: Vec<f64> = (0..cells.len()).map(|_| rng.random::<f64>().powi(4) + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        for (c, r) in raw.iter().enumerate() {
            w[c] = (1.0 - cfg.demographic_signal) / cells.len() as f64 + cfg.demographic_signal * r / total;
        }
    }
    let mut likelihood = DemographicLikelihoodTable::default();
    for (c, &(g, gender, race)) in cells.iter().enumerate() {
        likelihood.insert(
            DemoKey::new(g, gender, race),
            [cell_weights[0][c], cell_weights[1][c], cell_weights[2][c]],
        )?;
    }
    likelihood.set_fallback([1.0, 1.0, 1.0])?;
    let cell_dists: Vec<WeightedIndex<f64>> = cell_weights
        .iter()
        .map(|w| WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<_>>()?;

    let firsts = syllable_names(300, 0);
    let lasts = syllable_names(1000, 7);

    let mut voters = Vec::with_capacity(cfg.n_voters);
    let mut parties = Vec::with_capacity(cfg.n_voters);
    let mut voter_region = Vec::with_capacity(cfg.n_voters);
    let mut precinct_counts: BTreeMap<String, (String, [usize; 3])> = BTreeMap::new();
    for i in 0..cfg.n_voters {
        let s = rng.random_range(0..cfg.n_states);
        let st = &states[s];
        let u: f64 = rng.random();
        let party = if u < st.mix[0] {
            Party::Dem
        } else if u < st.mix[0] + st.mix[1] {
            Party::Rep
        } else {
            Party::Ind
        };
        let own = st.regions_of(party);
        let (row, col) = if rng.random_bool(h) && !own.is_empty() {
            let r = own[rng.random_range(0..own.len())];
            let (rr, rc) = (r / REGIONS_PER_SIDE, r % REGIONS_PER_SIDE);
            (
                (rr * REGION) as f64 + rng.random::<f64>() * REGION as f64,
                (rc * REGION) as f64 + rng.random::<f64>() * REGION as f64,
            )
        } else {
            (rng.random::<f64>() * GRID as f64, rng.random::<f64>() * GRID as f64)
        };
        let (pr, pc) = ((row as usize).min(GRID - 1), (col as usize).min(GRID - 1));
        let region = (pr / REGION) * REGIONS_PER_SIDE + pc / REGION;
        let location = GeoPoint::new(st.lat0 + row / GRID as f64, st.lon0 + col / GRID as f64)?;
        let pid = precinct_id(&st.id, pr, pc);
        precinct_counts.entry(pid.clone()).or_insert_with(|| (st.id.clone(), [0; 3])).1[party.index()] += 1;

        let (g, gender, race) = cells[cell_dists[party.index()].sample(&mut rng)];
        let (lo, hi) = g.range();
        let mut demographics = Demographics {
            age: Some(rng.random_range(lo..=hi)),
            gender: Some(gender.to_string()),
            race: Some(race.to_string()),
        };
        if rng.random_bool(cfg.missing_demographics) {
            match rng.random_range(0..3) {
                0 => demographics.age = None,
                1 => demographics.gender = None,
                _ => demographics.race = None,
            }
        }
        let party_label = if rng.random_bool(cfg.registered_fraction) {
            let third = rng.random_bool(cfg.third_party_fraction);
            Some(
                match (party, third) {
                    (Party::Dem, false) => "Democratic",
                    (Party::Dem, true) => "Green",
                    (Party::Rep, false) => "Republican",
                    (Party::Rep, true) => "Libertarian",
                    (Party::Ind, _) => "Non-Partisan",
                }
                .to_string(),
            )
        } else {
            None
        };
        voters.push(VoterRecord {
            voter_id: format!("V{i:07}"),
            first: firsts[rng.random_range(0..firsts.len())].clone(),
            last: lasts[rng.random_range(0..lasts.len())].clone(),
            city: format!("{} City {}", st.id, region + 1),
            state: st.id.clone(),
            location: Some(location),
            party_label,
            demographics,
            precinct_id: Some(pid),
        });
        parties.push(party);
        voter_region.push((s, region));
    }

    let precincts: Vec<PrecinctRow> = precinct_counts
        .iter()
        .map(|(pid, (state, c))| {
            let n = (c[0] + c[1] + c[2]) as f64;
            PrecinctRow {
                precinct_id: pid.clone(),
                state: state.clone(),
                share_dem: c[0] as f64 / n,
                share_rep: c[1] as f64 / n,
                total_votes: Some(n),
            }
        })
        .collect();
    let state_results: Vec<StateResult> = states
        .iter()
        .map(|st| {
            let (mut d, mut r, mut n) = (0usize, 0usize, 0usize);
            for (_, (s, c)) in precinct_counts.iter() {
                if *s == st.id {
                    d += c[0];
                    r += c[1];
                    n += c.iter().sum::<usize>();
                }
            }
            let n = n.max(1) as f64;
            StateResult {
                state: st.id.clone(),
                share_dem: d as f64 / n,
                share_rep: r as f64 / n,
            }
        })
        .collect();
    let mut generative_priors = BTreeMap::new();
    for st in &states {
        for pr in 0..GRID {
            for pc in 0..GRID {
                let region = (pr / REGION) * REGIONS_PER_SIDE + pc / REGION;
                generative_priors.insert(precinct_id(&st.id, pr, pc), st.generative(region, h));
            }
        }
    }

    // Elites: Dem first, then Rep; every elite anchors its side.
    let mut elites = Vec::new();
    let mut elite_party = Vec::new();
    for (p, side) in [(Party::Dem, AnchorSide::Liberal), (Party::Rep, AnchorSide::Conservative)] {
        for j in 0..cfg.n_elites_per_party {
            elites.push(Elite {
                account_id: format!("E{}{j:03}", p.as_str().chars().next().unwrap_or('X')),
                anchor: Some(side),
            });
            elite_party.push(p);
        }
    }

    let mut account_voters = rand::seq::index::sample(&mut rng, cfg.n_voters, cfg.n_accounts).into_vec();
    account_voters.sort_unstable();
    let n_linkable = (cfg.linkable_fraction * cfg.n_accounts as f64).round() as usize;
    let mut linkable = vec![false; cfg.n_accounts];
    for a in rand::seq::index::sample(&mut rng, cfg.n_accounts, n_linkable) {
        linkable[a] = true;
    }
    let mut accounts = Vec::with_capacity(cfg.n_accounts);
    let mut engaged = vec![false; cfg.n_accounts];
    let mut edges = Vec::new();
    let q_out = cfg.q_in / cfg.follow_homophily;
    let q_mid = (cfg.q_in + q_out) / 2.0;
    for (a, &vi) in account_voters.iter().enumerate() {
        let v = &voters[vi];
        let id = format!("A{a:06}");
        let (first, last, city) = if linkable[a] {
            match a % 3 {
                0 => (v.first.to_uppercase(), v.last.clone(), v.city.clone()),
                1 => (format!(" {}", v.first), v.last.to_lowercase(), v.city.clone()),
                _ => (v.first.clone(), v.last.clone(), v.city.to_lowercase()),
            }
        } else {
            (format!("anon{a}"), v.last.clone(), v.city.clone())
        };
        accounts.push(SocialAccount {
            account_id: id.clone(),
            first,
            last,
            city,
            state: v.state.clone(),
        });
        let party = parties[vi];
        engaged[a] = rng.random_bool(cfg.scoreability);
        let mut followed: Vec<usize> = Vec::new();
        if engaged[a] {
            for (j, &ep) in elite_party.iter().enumerate() {
                let q = match party {
                    Party::Ind => q_mid,
                    p if p == ep => cfg.q_in,
                    _ => q_out,
                };
                if rng.random_bool(q) {
                    followed.push(j);
                }
            }
            while followed.len() < 3.min(elites.len()) {
                let j = rng.random_range(0..elites.len());
                if !followed.contains(&j) {
                    followed.push(j);
                }
            }
        } else {
            let n = rng.random_range(0..=2usize.min(elites.len()));
            for j in rand::seq::index::sample(&mut rng, elites.len(), n) {
                followed.push(j);
            }
        }
        followed.sort_unstable();
        for j in followed {
            edges.push(FollowEdge {
                src: id.clone(),
                dst: elites[j].account_id.clone(),
            });
        }
    }

    let mut by_party: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (a, &vi) in account_voters.iter().enumerate() {
        by_party[parties[vi].index()].push(a);
    }
    let shares: Vec<f64> = by_party.iter().map(|v| v.len() as f64 / cfg.n_accounts as f64).collect();
    let ratio = cfg.friend_ratio();
    let friend_weights = |p: Party| -> [f64; 3] {
        let mut w = [shares[0], shares[1], shares[2]];
        w[p.index()] *= ratio;
        w
    };
    let mut expected_online: Vec<Option<f64>> = vec![None; cfg.n_accounts];
    for a in 0..cfg.n_accounts {
        if !linkable[a] {
            continue;
        }
        let party = parties[account_voters[a]];
        let w = friend_weights(party);
        expected_online[a] = Some(w[party.index()] / w.iter().sum::<f64>());
        let dist = WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string()))?;
        let want = rng.random_range(cfg.friends_min..=cfg.friends_max).min(cfg.n_accounts - 1);
        let mut chosen: HashSet<usize> = HashSet::with_capacity(want);
        let mut order = Vec::with_capacity(want);
        let mut attempts = 0usize;
        while order.len() < want && attempts < want * 50 {
            attempts += 1;
            let pool = &by_party[dist.sample(&mut rng)];
            if pool.is_empty() {
                continue;
            }
            let f = pool[rng.random_range(0..pool.len())];
            if f != a && chosen.insert(f) {
                order.push(f);
            }
        }
        order.sort_unstable();
        for f in order {
            edges.push(FollowEdge {
                src: accounts[a].account_id.clone(),
                dst: accounts[f].account_id.clone(),
            });
        }
    }

    let mut voter_account: Vec<Option<usize>> = vec![None; cfg.n_voters];
    for (a, &vi) in account_voters.iter().enumerate() {
        voter_account[vi] = Some(a);
    }
    let truth = voters
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (s, region) = voter_region[i];
            let acct = voter_account[i];
            TruthRow {
                voter_id: v.voter_id.clone(),
                party: parties[i],
                account_id: acct.map(|a| accounts[a].account_id.clone()),
                linkable: acct.is_some_and(|a| linkable[a]),
                engaged: acct.is_some_and(|a| engaged[a]),
                expected_offline: states[s].generative(region, h)[parties[i].index()],
                expected_online: acct.and_then(|a| expected_online[a]),
            }
        })
        .collect();

    Ok(World {
        voters,
        accounts,
        elites,
        edges,
        precincts,
        likelihood,
        state_results,
        truth,
        generative_priors,
    })
}

pub const TRUTH_COLUMNS: &[&str] = &[
    "voter_id",
    "true_party",
    "account_id",
    "linkable",
    "engaged",
    "expected_offline",
    "expected_online",
];

pub fn truth_csv(rows: &[TruthRow]) -> Vec<u8> {
    roster::csv_bytes(
        TRUTH_COLUMNS,
        rows.iter().map(|t| {
            vec![
                t.voter_id.clone(),
                t.party.as_str().to_string(),
                t.account_id.clone().unwrap_or_default(),
                t.linkable.to_string(),
                t.engaged.to_string(),
                t.expected_offline.to_string(),
                t.expected_online.map(|x| x.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

/// File names of a world on disk, relative to its directory.
pub const WORLD_FILES: [&str; 8] = [
    "voters.csv",
    "accounts.csv",
    "edges.csv",
    "elites.csv",
    "precinct_priors.csv",
    "likelihood_table.csv",
    "state_results.csv",
    "truth.csv",
];

/// Writes every input table plus the truth sidecar into `dir`.
pub fn write_world(world: &World, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let contents = [
        roster::voters_csv(&world.voters),
        roster::accounts_csv(&world.accounts),
        roster::edges_csv(&world.edges),
        roster::elites_csv(&world.elites),
        roster::precinct_priors_csv(&world.precincts),
        roster::likelihood_table_csv(&world.likelihood),
        roster::state_results_csv(&world.state_results),
        truth_csv(&world.truth),
    ];
    WORLD_FILES
        .iter()
        .zip(contents)
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// One-dimensional ideal-point world: users and elites on a line, follow
/// probability decaying with squared distance. Returns the pruned matrix and
/// each kept row's true position.
pub fn ideal_point_world(n_users: usize, n_elites: usize, seed: u64) -> Result<(FollowMatrix, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let span = 2.5;
    let elite_pos: Vec<f64> = (0..n_elites)
        .map(|j| -span + 2.0 * span * j as f64 / (n_elites.max(2) - 1) as f64)
        .collect();
    let col_ids: Vec<String> = (0..n_elites).map(|j| format!("e{j:04}")).collect();
    let mut truth = BTreeMap::new();
    let rows = (0..n_users)
        .map(|i| {
            let theta: f64 = normal.sample(&mut rng);
            let id = format!("u{i:06}");
            truth.insert(id.clone(), theta);
            let follows = elite_pos
                .iter()
                .enumerate()
                .filter(|(_, &e)| rng.random_bool(0.9 * (-(theta - e).powi(2) / 0.5).exp()))
                .map(|(j, _)| col_ids[j].clone())
                .collect();
            (id, follows)
        })
        .collect();
    let m = FollowMatrix::from_named_rows(col_ids, rows)?.prune();
    let t = m.row_ids.iter().map(|id| truth[id]).collect();
    Ok((m, t))
}
