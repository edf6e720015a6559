//! Summaries over paired isolation scores: percentile profiles, equal-width
//! binned means and seeded percentile-bootstrap intervals for medians.
//!
//! Percentiles everywhere use linear interpolation between order statistics:
//! for sorted `x` of length `n`, position `h = (n - 1) * p / 100`.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::partisan::{AgeGroup, Party};

pub const FIGURE_PERCENTILES: [f64; 7] = [1.0, 10.0, 25.0, 50.0, 75.0, 90.0, 99.0];
pub const DEFAULT_BINS: usize = 500;
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.99;
/// Two-party margin at or below which a state is a swing state.
pub const SWING_MARGIN: f64 = 0.03;

/// `sorted` must be ascending and non-empty; `p` in [0, 100].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Config(format!("percentile {p} outside [0, 100]")));
    }
    Ok(percentile_sorted(&sorted_copy(values), p))
}

pub fn median(values: &[f64]) -> Result<f64> {
    percentile(values, 50.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileProfile {
    pub group: String,
    pub n: usize,
    /// (percentile, value), in the requested order.
    pub values: Vec<(f64, f64)>,
}

pub fn percentile_profile(group: &str, scores: &[f64], percentiles: &[f64]) -> Result<PercentileProfile> {
    if scores.is_empty() {
        return Err(Error::InsufficientData(format!("no scores for group {group}")));
    }
    let sorted = sorted_copy(scores);
    let values = percentiles
        .iter()
        .map(|&p| {
            if (0.0..=100.0).contains(&p) {
                Ok((p, percentile_sorted(&sorted, p)))
            } else {
                Err(Error::Config(format!("percentile {p} outside [0, 100]")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(PercentileProfile {
        group: group.to_string(),
        n: scores.len(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedCurve {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `None` for empty bins.
    pub means: Vec<Option<f64>>,
}

/// Equal-width bin index of `x` over `[lo, lo + width * bins]`.
pub fn bin_index(x: f64, lo: f64, width: f64, bins: usize) -> usize {
    (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1)
}

/// Equal-width binning of `x` over its observed range, averaging `y` per
/// bin. Values inside a bin are summed in sorted order so the result does
/// not depend on input order. A constant `x` gets a unit-wide range
/// centered on the value.
pub fn binned_means(x: &[f64], y: &[f64], bins: usize) -> Result<BinnedCurve> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("binned means of an empty sample".into()));
    }
    if bins == 0 {
        return Err(Error::Config("bins must be at least 1".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("non-finite value in binned means".into()));
    }
    let (mut lo, mut hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);

    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (&xi, &yi) in x.iter().zip(y) {
        members[bin_index(xi, lo, width, bins)].push(yi);
    }
    let counts = members.iter().map(Vec::len).collect();
    let means = members
        .into_iter()
        .map(|mut ys| {
            if ys.is_empty() {
                return None;
            }
            ys.sort_by(f64::total_cmp);
            Some(ys.iter().sum::<f64>() / ys.len() as f64)
        })
        .collect();
    Ok(BinnedCurve { edges, counts, means })
}

/// Deterministic RNG for one bootstrap resample, derived from the run seed,
/// the subgroup key and the resample index. Independent of scheduling.
pub fn substream_rng(seed: u64, key: &str, resample: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update((resample as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(bytes)
}

/// Row indices drawn with replacement for resample `b`.
pub fn resample_indices(seed: u64, key: &str, resample: usize, n: usize) -> Vec<usize> {
    let mut rng = substream_rng(seed, key, resample);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupDiff {
    pub key: String,
    pub n: usize,
    /// Median of offline - online; positive means more isolated offline.
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
            seed: 0,
        }
    }
}

/// Median paired difference (offline - online) with a percentile-bootstrap
/// interval.
pub fn bootstrap_median_diff(key: &str, pairs: &[(f64, f64)], cfg: &BootstrapConfig) -> Result<SubgroupDiff> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "bootstrap for {key} needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    if cfg.resamples == 0 || !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::Config(format!(
            "bootstrap needs resamples >= 1 and level in (0, 1), got {} / {}",
            cfg.resamples, cfg.level
        )));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(off, on)| off - on).collect();
    let n = diffs.len();
    let stat = percentile_sorted(&sorted_copy(&diffs), 50.0);
    let mut boot: Vec<f64> = (0..cfg.resamples)
        .into_par_iter()
        .map(|b| {
            let mut sample: Vec<f64> = resample_indices(cfg.seed, key, b, n)
                .into_iter()
                .map(|i| diffs[i])
                .collect();
            sample.sort_by(f64::total_cmp);
            percentile_sorted(&sample, 50.0)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0 * 100.0;
    Ok(SubgroupDiff {
        key: key.to_string(),
        n,
        median: stat,
        ci_low: percentile_sorted(&boot, tail),
        ci_high: percentile_sorted(&boot, 100.0 - tail),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateType {
    DemLeaning,
    RepLeaning,
    Swing,
}

impl StateType {
    pub fn as_str(self) -> &'static str {
        match self {
            StateType::DemLeaning => "dem_leaning",
            StateType::RepLeaning => "rep_leaning",
            StateType::Swing => "swing",
        }
    }
}

/// Shares may be fractions or percentages; values above 1 are read as percent.
pub fn classify_state(share_dem: f64, share_rep: f64, margin: f64) -> StateType {
    let (d, r) = if share_dem > 1.0 || share_rep > 1.0 {
        (share_dem / 100.0, share_rep / 100.0)
    } else {
        (share_dem, share_rep)
    };
    if (d - r).abs() <= margin + 1e-9 {
        StateType::Swing
    } else if d > r {
        StateType::DemLeaning
    } else {
        StateType::RepLeaning
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Party,
    Gender,
    Race,
    AgeBand,
    StateType,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Party => "party",
            Dimension::Gender => "gender",
            Dimension::Race => "race",
            Dimension::AgeBand => "age_band",
            Dimension::StateType => "state_type",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "party" => Ok(Dimension::Party),
            "gender" => Ok(Dimension::Gender),
            "race" => Ok(Dimension::Race),
            "age_band" => Ok(Dimension::AgeBand),
            "state_type" => Ok(Dimension::StateType),
            other => Err(Error::Config(format!("unknown subgroup dimension `{other}`"))),
        }
    }

    pub const ALL: [Dimension; 5] = [
        Dimension::Party,
        Dimension::Gender,
        Dimension::Race,
        Dimension::AgeBand,
        Dimension::StateType,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBand {
    pub label: String,
    pub min: u32,
    pub max: u32,
}

pub fn default_age_bands() -> Vec<AgeBand> {
    AgeGroup::ALL
        .iter()
        .map(|g| {
            let (min, max) = g.range();
            AgeBand {
                label: g.label().to_string(),
                min,
                max: if *g == AgeGroup::A63Plus { u32::MAX } else { max },
            }
        })
        .collect()
}

/// One linked individual with both isolation scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub ego_id: String,
    pub party: Party,
    pub offline: f64,
    pub online: f64,
    pub gender: Option<String>,
    pub race: Option<String>,
    pub age: Option<u32>,
    pub state: String,
}

pub struct SplitSpec<'a> {
    pub dimensions: &'a [Dimension],
    pub age_bands: &'a [AgeBand],
    pub state_types: &'a HashMap<String, StateType>,
}

fn level_of(row: &PanelRow, dim: Dimension, spec: &SplitSpec<'_>) -> Option<String> {
    match dim {
        Dimension::Party => Some(String::new()),
        Dimension::Gender => row.gender.clone(),
        Dimension::Race => row.race.clone(),
        Dimension::AgeBand => {
            let age = row.age?;
            spec.age_bands
                .iter()
                .find(|b| age >= b.min && age <= b.max)
                .map(|b| b.label.clone())
        }
        Dimension::StateType => spec.state_types.get(&row.state).map(|t| t.as_str().to_string()),
    }
}

/// Party x level groups for every requested dimension. Rows lacking the
/// dimension's value are left out of that dimension; groups with fewer than
/// two rows are dropped.
pub fn subgroup_split(panel: &[PanelRow], spec: &SplitSpec<'_>, cfg: &BootstrapConfig) -> Result<Vec<SubgroupDiff>> {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for &dim in spec.dimensions {
        if dim == Dimension::StateType && spec.state_types.is_empty() {
            return Err(Error::Config("state_type split needs a state results table".into()));
        }
        for row in panel.iter().filter(|r| r.party != Party::Ind) {
            let Some(level) = level_of(row, dim, spec) else {
                continue;
            };
            let key = if dim == Dimension::Party {
                format!("party={}", row.party)
            } else {
                format!("party={};{}={}", row.party, dim.as_str(), level)
            };
            groups.entry(key).or_default().push((row.offline, row.online));
        }
    }
    groups
        .iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(k, v)| bootstrap_median_diff(k, v, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn interpolated_percentiles() {
        assert_eq!(percentile(&[0.0, 1.0], 50.0).unwrap(), 0.5);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert!((percentile(&grid, 25.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(percentile(&[], 50.0).is_err());
        assert_eq!(percentile(&[3.0], 99.0).unwrap(), 3.0);
    }

    #[test]
    fn profile_is_monotone_and_median_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..333).map(|_| rng.random::<f64>()).collect();
        let prof = percentile_profile("g", &xs, &FIGURE_PERCENTILES).unwrap();
        assert!(prof.values.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(prof.values[3].1, median(&xs).unwrap());
        assert!(percentile_profile("g", &[], &FIGURE_PERCENTILES).is_err());
    }

    #[test]
    fn constant_y_gives_constant_means() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64).sqrt()).collect();
        let y = vec![0.42; 1000];
        let c = binned_means(&x, &y, 500).unwrap();
        assert_eq!(c.edges.len(), 501);
        assert!(c.edges.windows(2).all(|w| w[0] < w[1]));
        assert!(c.means.iter().flatten().all(|&m| (m - 0.42).abs() < 1e-15));
        assert_eq!(c.counts.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn identity_curve_tracks_bin_centers() {
        let x: Vec<f64> = (0..=100_000).map(|i| i as f64 / 100_000.0).collect();
        let c = binned_means(&x, &x, 500).unwrap();
        let half = (c.edges[1] - c.edges[0]) / 2.0;
        for i in 0..500 {
            let center = (c.edges[i] + c.edges[i + 1]) / 2.0;
            assert!((c.means[i].unwrap() - center).abs() <= half);
        }
    }

    #[test]
    fn binned_errors_and_empty_bins() {
        assert!(matches!(
            binned_means(&[1.0], &[1.0, 2.0], 5),
            Err(Error::LengthMismatch { .. })
        ));
        let c = binned_means(&[0.0, 1.0], &[5.0, 7.0], 4).unwrap();
        assert_eq!(c.counts, vec![1, 0, 0, 1]);
        assert_eq!(c.means, vec![Some(5.0), None, None, Some(7.0)]);
        let c = binned_means(&[2.0, 2.0], &[1.0, 3.0], 3).unwrap();
        assert_eq!(c.counts.iter().sum::<usize>(), 2);
    }

    #[test]
    fn zero_variance_bootstrap_is_degenerate() {
        let pairs = vec![(0.7, 0.5); 50];
        let d = bootstrap_median_diff("k", &pairs, &BootstrapConfig::default()).unwrap();
        assert!((d.median - 0.2).abs() < 1e-12);
        assert_eq!(d.ci_low, d.median);
        assert_eq!(d.ci_high, d.median);
    }

    #[test]
    fn antisymmetric_sample_straddles_zero() {
        let pairs: Vec<(f64, f64)> = (1..=200)
            .flat_map(|i| {
                let v = i as f64 / 1000.0;
                [(0.5 + v, 0.5), (0.5, 0.5 + v)]
            })
            .collect();
        let d = bootstrap_median_diff("k", &pairs, &BootstrapConfig::default()).unwrap();
        assert_eq!(d.median, 0.0);
        assert!(d.ci_low < 0.0 && d.ci_high > 0.0);
    }

    #[test]
    fn bootstrap_needs_two_pairs() {
        assert!(bootstrap_median_diff("k", &[(1.0, 0.0)], &BootstrapConfig::default()).is_err());
    }

    #[test]
    fn bootstrap_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs: Vec<(f64, f64)> = (0..300).map(|_| (rng.random(), rng.random())).collect();
        let cfg = BootstrapConfig { resamples: 200, level: 0.99, seed: 11 };
        let a = bootstrap_median_diff("k", &pairs, &cfg).unwrap();
        let b = bootstrap_median_diff("k", &pairs, &cfg).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_median_diff("k", &pairs, &BootstrapConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.ci_low, c.ci_low);
        assert!(a.ci_low <= a.median && a.median <= a.ci_high);
    }

    #[test]
    fn swing_rule() {
        assert_eq!(classify_state(0.51, 0.49, SWING_MARGIN), StateType::Swing);
        assert_eq!(classify_state(51.0, 49.0, SWING_MARGIN), StateType::Swing);
        assert_eq!(classify_state(0.515, 0.485, SWING_MARGIN), StateType::Swing);
        assert_eq!(classify_state(0.60, 0.38, SWING_MARGIN), StateType::DemLeaning);
        assert_eq!(classify_state(0.40, 0.58, SWING_MARGIN), StateType::RepLeaning);
    }

    #[test]
    fn unknown_dimension_is_config_error() {
        assert!(matches!(Dimension::parse("income"), Err(Error::Config(_))));
    }

    #[test]
    fn split_groups_by_party_and_level() {
        let row = |id: usize, party, gender: &str, age| PanelRow {
            ego_id: format!("v{id}"),
            party,
            offline: 0.8,
            online: 0.6,
            gender: Some(gender.into()),
            race: None,
            age: Some(age),
            state: "S".into(),
        };
        let panel: Vec<PanelRow> = (0..12)
            .map(|i| row(i, if i % 2 == 0 { Party::Dem } else { Party::Rep }, if i % 3 == 0 { "F" } else { "M" }, 20 + 5 * i as u32))
            .collect();
        let states = HashMap::from([("S".to_string(), StateType::Swing)]);
        let bands = default_age_bands();
        let spec = SplitSpec {
            dimensions: &Dimension::ALL,
            age_bands: &bands,
            state_types: &states,
        };
        let cfg = BootstrapConfig { resamples: 50, level: 0.99, seed: 1 };
        let out = subgroup_split(&panel, &spec, &cfg).unwrap();
        let keys: Vec<&str> = out.iter().map(|d| d.key.as_str()).collect();
        assert!(keys.contains(&"party=Dem"));
        assert!(keys.contains(&"party=Rep;state_type=swing"));
        assert!(keys.contains(&"party=Dem;gender=F"));
        assert!(!keys.iter().any(|k| k.contains("race")));
        assert!(out.iter().all(|d| (d.median - 0.2).abs() < 1e-12));
        let p = out.iter().find(|d| d.key == "party=Dem").unwrap();
        assert_eq!(p.n, 6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn binned_permutation_invariant(
                pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..300),
                seed in any::<u64>(),
            ) {
                let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
                let a = binned_means(&x, &y, 37).unwrap();
                let mut shuffled = pairs.clone();
                use rand::seq::SliceRandom;
                shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let (x2, y2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
                prop_assert_eq!(a, binned_means(&x2, &y2, 37).unwrap());
            }

            #[test]
            fn percentiles_monotone(xs in prop::collection::vec(-1e3f64..1e3, 1..200)) {
                let prof = percentile_profile("g", &xs, &FIGURE_PERCENTILES).unwrap();
                prop_assert!(prof.values.windows(2).all(|w| w[0].1 <= w[1].1));
            }

            #[test]
            fn interval_brackets_median(
                pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..80),
                seed in any::<u64>(),
            ) {
                let cfg = BootstrapConfig { resamples: 200, level: 0.99, seed };
                let d = bootstrap_median_diff("k", &pairs, &cfg).unwrap();
                prop_assert!(d.ci_low <= d.median && d.median <= d.ci_high, "{:?}", d);
            }
        }
    }
}
