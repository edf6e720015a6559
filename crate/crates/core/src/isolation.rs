//! Ingroup isolation: the share of an individual's neighbors (offline) or
//! scored friends (online) who belong to the individual's party.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{build_state_indexes, SpatialIndex};
use crate::partisan::{discretize, PartisanPosterior, Party};
use crate::roster::VoterRecord;

pub const DEFAULT_K: usize = 1000;
pub const ROBUSTNESS_K: usize = 500;
pub const DEFAULT_MIN_SCORED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Offline,
    Online,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Offline => "offline",
            Channel::Online => "online",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(Channel::Offline),
            "online" => Ok(Channel::Online),
            o => Err(Error::Config(format!("unknown channel `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Neighbors weighted by their posterior mass on the ego's party.
    #[default]
    Probabilistic,
    /// Neighbors counted by argmax class.
    Discrete,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Probabilistic => "probabilistic",
            Variant::Discrete => "discrete",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probabilistic" => Ok(Variant::Probabilistic),
            "discrete" => Ok(Variant::Discrete),
            o => Err(Error::Config(format!("unknown variant `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    EgoIndependent,
    NoCoordinates,
    NoNeighbors,
    NoPosterior,
    NoFriends,
    BelowMinScored,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::EgoIndependent => "ego_independent",
            SkipReason::NoCoordinates => "no_coordinates",
            SkipReason::NoNeighbors => "no_neighbors",
            SkipReason::NoPosterior => "no_posterior",
            SkipReason::NoFriends => "no_friends",
            SkipReason::BelowMinScored => "below_min_scored",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationScore {
    pub ego_id: String,
    pub party: Party,
    pub channel: Channel,
    pub variant: Variant,
    /// Nominal neighborhood size (offline) or scored-friend threshold (online).
    pub k: usize,
    pub value: f64,
    pub n_used: usize,
}

/// Isolation value and the number of neighbors it was averaged over.
pub fn offline_isolation(
    ego: &PartisanPosterior,
    neighbors: &[PartisanPosterior],
    variant: Variant,
) -> Result<(Party, f64), SkipReason> {
    let party = discretize(ego);
    if party == Party::Ind {
        return Err(SkipReason::EgoIndependent);
    }
    if neighbors.is_empty() {
        return Err(SkipReason::NoNeighbors);
    }
    let total: f64 = match variant {
        Variant::Probabilistic => neighbors.iter().map(|n| n.p(party)).sum(),
        Variant::Discrete => neighbors.iter().filter(|n| discretize(n) == party).count() as f64,
    };
    Ok((party, total / neighbors.len() as f64))
}

#[derive(Debug, Clone, Default)]
pub struct BatchResult {
    pub scores: Vec<IsolationScore>,
    pub skipped: Vec<(String, SkipReason)>,
    /// Egos whose state population was too small to supply `k` neighbors.
    pub truncated: usize,
}

impl BatchResult {
    pub fn skip_counts(&self) -> BTreeMap<SkipReason, usize> {
        let mut m = BTreeMap::new();
        for (_, r) in &self.skipped {
            *m.entry(*r).or_insert(0) += 1;
        }
        m
    }
}

/// Per-state spatial indexes with each slot's posterior attached.
pub struct OfflineContext {
    indexes: Vec<SpatialIndex>,
    posteriors: Vec<Vec<PartisanPosterior>>,
    locate: HashMap<String, (usize, usize)>,
}

impl OfflineContext {
    /// Voters without coordinates are left out of every index.
    pub fn new(voters: &[VoterRecord], posteriors: &HashMap<String, PartisanPosterior>) -> Result<Self> {
        let rows = voters.iter().filter_map(|v| {
            v.location
                .map(|p| (v.state.clone(), v.voter_id.clone(), p))
        });
        let indexes = build_state_indexes(rows)?;
        let mut locate = HashMap::new();
        let mut post = Vec::with_capacity(indexes.len());
        for (i, idx) in indexes.iter().enumerate() {
            let mut col = Vec::with_capacity(idx.len());
            for slot in 0..idx.len() {
                let id = idx.voter_id(slot);
                let p = posteriors
                    .get(id)
                    .ok_or_else(|| Error::NotFound(format!("posterior for voter `{id}`")))?;
                col.push(*p);
                locate.insert(id.to_string(), (i, slot));
            }
            post.push(col);
        }
        Ok(OfflineContext {
            indexes,
            posteriors: post,
            locate,
        })
    }

    pub fn indexes(&self) -> &[SpatialIndex] {
        &self.indexes
    }

    pub fn score(&self, ego_id: &str, k: usize, variant: Variant) -> Result<(IsolationScore, bool), SkipReason> {
        let &(i, slot) = self.locate.get(ego_id).ok_or(SkipReason::NoCoordinates)?;
        let index = &self.indexes[i];
        let list = index.knn_slot(slot, k);
        let neigh: Vec<PartisanPosterior> = list
            .neighbors
            .iter()
            .map(|n| self.posteriors[i][n.slot])
            .collect();
        let (party, value) = offline_isolation(&self.posteriors[i][slot], &neigh, variant)?;
        Ok((
            IsolationScore {
                ego_id: ego_id.to_string(),
                party,
                channel: Channel::Offline,
                variant,
                k,
                value,
                n_used: list.k_returned,
            },
            list.k_returned < k,
        ))
    }

    /// Scores every ego; output is sorted by ego id.
    pub fn isolation_batch(&self, egos: &[String], k: usize, variant: Variant) -> Result<BatchResult> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let results: Vec<(String, Result<(IsolationScore, bool), SkipReason>)> = egos
            .par_iter()
            .map(|e| (e.clone(), self.score(e, k, variant)))
            .collect();
        let mut out = BatchResult::default();
        for (ego, r) in results {
            match r {
                Ok((s, truncated)) => {
                    out.truncated += usize::from(truncated);
                    out.scores.push(s);
                }
                Err(reason) => out.skipped.push((ego, reason)),
            }
        }
        out.scores.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));
        out.skipped.sort();
        Ok(out)
    }
}

/// Share of scored friends whose class matches `ego_party`. Independents
/// count in the denominator only.
pub fn online_isolation(
    ego_party: Party,
    friend_classes: &[Party],
    min_scored: usize,
) -> Result<f64, SkipReason> {
    if ego_party == Party::Ind {
        return Err(SkipReason::EgoIndependent);
    }
    let n = friend_classes.len();
    if n == 0 || n < min_scored {
        return Err(SkipReason::BelowMinScored);
    }
    let same = friend_classes.iter().filter(|&&c| c == ego_party).count();
    Ok(same as f64 / n as f64)
}

/// `None` when the ego has no friends at all.
pub fn scored_friend_fraction(n_friends: usize, n_scored: usize) -> Option<f64> {
    (n_friends > 0).then(|| n_scored as f64 / n_friends as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriendCoverage {
    pub ego_id: String,
    pub n_friends: usize,
    pub n_scored: usize,
    pub fraction: Option<f64>,
}

/// One linked ego for the online channel.
#[derive(Debug, Clone)]
pub struct OnlineEgo {
    pub ego_id: String,
    pub account_id: String,
    pub party: Party,
}

#[derive(Debug, Clone, Default)]
pub struct OnlineBatch {
    pub result: BatchResult,
    pub coverage: Vec<FriendCoverage>,
}

impl OnlineBatch {
    /// Pooled scored-friend fraction over all egos with at least one friend.
    pub fn pooled_fraction(&self) -> Option<f64> {
        let (f, s) = self
            .coverage
            .iter()
            .fold((0usize, 0usize), |(f, s), c| (f + c.n_friends, s + c.n_scored));
        scored_friend_fraction(f, s)
    }

    pub fn mean_fraction(&self) -> Option<f64> {
        let fr: Vec<f64> = self.coverage.iter().filter_map(|c| c.fraction).collect();
        (!fr.is_empty()).then(|| fr.iter().sum::<f64>() / fr.len() as f64)
    }
}

pub fn online_isolation_batch(
    egos: &[OnlineEgo],
    friends: &HashMap<String, Vec<String>>,
    classes: &HashMap<String, Party>,
    min_scored: usize,
) -> OnlineBatch {
    let rows: Vec<(FriendCoverage, Result<IsolationScore, SkipReason>)> = egos
        .par_iter()
        .map(|ego| {
            let list = friends.get(&ego.account_id).map_or(&[][..], Vec::as_slice);
            let scored: Vec<Party> = list.iter().filter_map(|f| classes.get(f).copied()).collect();
            let cov = FriendCoverage {
                ego_id: ego.ego_id.clone(),
                n_friends: list.len(),
                n_scored: scored.len(),
                fraction: scored_friend_fraction(list.len(), scored.len()),
            };
            let res = if list.is_empty() && ego.party != Party::Ind {
                Err(SkipReason::NoFriends)
            } else {
                online_isolation(ego.party, &scored, min_scored).map(|value| IsolationScore {
                    ego_id: ego.ego_id.clone(),
                    party: ego.party,
                    channel: Channel::Online,
                    variant: Variant::Discrete,
                    k: min_scored,
                    value,
                    n_used: scored.len(),
                })
            };
            (cov, res)
        })
        .collect();
    let mut out = OnlineBatch::default();
    for (cov, res) in rows {
        match res {
            Ok(s) => out.result.scores.push(s),
            Err(r) => out.result.skipped.push((cov.ego_id.clone(), r)),
        }
        out.coverage.push(cov);
    }
    out.result.scores.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));
    out.result.skipped.sort();
    out.coverage.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partisan::PosteriorSource;

    fn p(d: f64, r: f64, i: f64) -> PartisanPosterior {
        PartisanPosterior {
            probs: [d, r, i],
            source: PosteriorSource::Imputed,
        }
    }

    fn reg(party: Party) -> PartisanPosterior {
        PartisanPosterior::degenerate(party, PosteriorSource::Registered)
    }

    #[test]
    fn arithmetic_mean_of_neighbor_mass() {
        let ns = [p(1.0, 0.0, 0.0), p(0.5, 0.5, 0.0), p(0.0, 1.0, 0.0), p(0.5, 0.25, 0.25)];
        let (party, v) = offline_isolation(&reg(Party::Dem), &ns, Variant::Probabilistic).unwrap();
        assert_eq!(party, Party::Dem);
        assert_eq!(v, 0.5);
    }

    #[test]
    fn homogeneous_rep_neighborhood() {
        let ns = vec![reg(Party::Rep); 7];
        let (_, v) = offline_isolation(&reg(Party::Rep), &ns, Variant::Probabilistic).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn discrete_counts_argmax() {
        let ns = [p(0.6, 0.4, 0.0), p(0.4, 0.6, 0.0), p(0.34, 0.33, 0.33), p(0.0, 0.0, 1.0)];
        let (_, v) = offline_isolation(&reg(Party::Dem), &ns, Variant::Discrete).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn offline_skips() {
        assert_eq!(
            offline_isolation(&reg(Party::Ind), &[reg(Party::Dem)], Variant::Probabilistic),
            Err(SkipReason::EgoIndependent)
        );
        assert_eq!(
            offline_isolation(&reg(Party::Dem), &[], Variant::Probabilistic),
            Err(SkipReason::NoNeighbors)
        );
    }

    #[test]
    fn online_counting() {
        let mut f = vec![Party::Dem; 6];
        f.extend([Party::Rep; 3]);
        f.push(Party::Ind);
        assert_eq!(online_isolation(Party::Dem, &f, 10), Ok(0.6));
        assert_eq!(online_isolation(Party::Rep, &[Party::Rep; 10], 10), Ok(1.0));
        assert_eq!(
            online_isolation(Party::Rep, &[Party::Rep; 9], 10),
            Err(SkipReason::BelowMinScored)
        );
    }

    #[test]
    fn friend_fraction() {
        assert_eq!(scored_friend_fraction(10, 3), Some(0.3));
        assert_eq!(scored_friend_fraction(5, 0), Some(0.0));
        assert_eq!(scored_friend_fraction(0, 0), None);
    }

    #[test]
    fn online_batch_reports_coverage_and_skips() {
        let egos = vec![
            OnlineEgo { ego_id: "v1".into(), account_id: "a1".into(), party: Party::Dem },
            OnlineEgo { ego_id: "v2".into(), account_id: "a2".into(), party: Party::Rep },
            OnlineEgo { ego_id: "v3".into(), account_id: "a3".into(), party: Party::Dem },
        ];
        let mut friends = HashMap::new();
        friends.insert("a1".to_string(), vec!["x".to_string(), "y".to_string(), "z".to_string()]);
        friends.insert("a2".to_string(), vec!["x".to_string()]);
        let classes: HashMap<String, Party> =
            [("x".to_string(), Party::Dem), ("y".to_string(), Party::Rep)].into_iter().collect();
        let b = online_isolation_batch(&egos, &friends, &classes, 1);
        assert_eq!(b.result.scores.len(), 2);
        assert_eq!(b.result.scores[0].value, 0.5);
        assert_eq!(b.result.scores[1].value, 0.0);
        assert_eq!(b.result.skipped, vec![("v3".to_string(), SkipReason::NoFriends)]);
        assert_eq!(b.pooled_fraction(), Some(0.75));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn posterior() -> impl Strategy<Value = PartisanPosterior> {
            (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_filter_map("zero mass", |(d, r, i)| {
                let s = d + r + i;
                (s > 1e-6).then(|| p(d / s, r / s, i / s))
            })
        }

        fn party() -> impl Strategy<Value = Party> {
            prop_oneof![Just(Party::Dem), Just(Party::Rep), Just(Party::Ind)]
        }

        proptest! {
            #[test]
            fn offline_scores_are_bounded(
                ego in posterior(),
                ns in prop::collection::vec(posterior(), 1..60),
                discrete in any::<bool>(),
            ) {
                let variant = if discrete { Variant::Discrete } else { Variant::Probabilistic };
                if let Ok((_, v)) = offline_isolation(&ego, &ns, variant) {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }

            #[test]
            fn variants_agree_on_degenerate_neighbors(
                ego in party(),
                ns in prop::collection::vec(party(), 1..60),
            ) {
                let ns: Vec<PartisanPosterior> = ns.into_iter().map(reg).collect();
                prop_assert_eq!(
                    offline_isolation(&reg(ego), &ns, Variant::Probabilistic),
                    offline_isolation(&reg(ego), &ns, Variant::Discrete)
                );
            }

            #[test]
            fn label_swap_is_exact(
                ego in posterior(),
                ns in prop::collection::vec(posterior(), 1..60),
            ) {
                let swapped: Vec<PartisanPosterior> = ns.iter().map(PartisanPosterior::swapped).collect();
                for variant in [Variant::Probabilistic, Variant::Discrete] {
                    let a = offline_isolation(&ego, &ns, variant);
                    let b = offline_isolation(&ego.swapped(), &swapped, variant);
                    match (a, b) {
                        (Ok((pa, va)), Ok((pb, vb))) => {
                            prop_assert_eq!(pa.swapped(), pb);
                            prop_assert_eq!(va, vb);
                        }
                        (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
                    }
                }
            }

            #[test]
            fn online_scores_are_bounded(
                ego in party(),
                friends in prop::collection::vec(party(), 0..40),
                min_scored in 1usize..10,
            ) {
                match online_isolation(ego, &friends, min_scored) {
                    Ok(v) => {
                        prop_assert!((0.0..=1.0).contains(&v));
                        prop_assert!(friends.len() >= min_scored);
                    }
                    Err(_) => prop_assert!(ego == Party::Ind || friends.len() < min_scored),
                }
            }
        }
    }
}
