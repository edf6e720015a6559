//! Planted subgroup gaps must fall inside their bootstrap intervals.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use segiso::partisan::Party;
use segiso::stats::{default_age_bands, subgroup_split, BootstrapConfig, Dimension, PanelRow, SplitSpec};

fn planted_gap(party: Party, gender: &str) -> f64 {
    match (party, gender) {
        (Party::Dem, "F") => 0.20,
        (Party::Dem, _) => 0.12,
        (Party::Rep, "F") => 0.05,
        _ => -0.03,
    }
}

fn panel(seed: u64, per_group: usize) -> Vec<PanelRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.08).unwrap();
    let mut rows = Vec::new();
    for party in [Party::Dem, Party::Rep] {
        for gender in ["F", "M"] {
            for i in 0..per_group {
                let online: f64 = rng.random_range(0.3..0.6);
                let offline = online + planted_gap(party, gender) + noise.sample(&mut rng);
                rows.push(PanelRow {
                    ego_id: format!("{party}{gender}{i}"),
                    party,
                    offline,
                    online,
                    gender: Some(gender.to_string()),
                    race: None,
                    age: None,
                    state: "S1".into(),
                });
            }
        }
    }
    rows
}

#[test]
fn planted_gaps_are_covered() {
    let bands = default_age_bands();
    let states = HashMap::new();
    let spec = SplitSpec {
        dimensions: &[Dimension::Gender],
        age_bands: &bands,
        state_types: &states,
    };
    let trials = 30;
    let (mut covered, mut total) = (0, 0);
    for t in 0..trials {
        let cfg = BootstrapConfig {
            resamples: 400,
            level: 0.99,
            seed: 1000 + t,
        };
        let diffs = subgroup_split(&panel(t, 300), &spec, &cfg).unwrap();
        assert_eq!(diffs.len(), 4);
        for d in &diffs {
            let (party, gender) = match d.key.as_str() {
                "party=Dem;gender=F" => (Party::Dem, "F"),
                "party=Dem;gender=M" => (Party::Dem, "M"),
                "party=Rep;gender=F" => (Party::Rep, "F"),
                "party=Rep;gender=M" => (Party::Rep, "M"),
                other => panic!("unexpected key {other}"),
            };
            assert_eq!(d.n, 300);
            assert!(d.ci_low <= d.median && d.median <= d.ci_high);
            let gap = planted_gap(party, gender);
            covered += (d.ci_low <= gap && gap <= d.ci_high) as usize;
            total += 1;
        }
    }
    let rate = covered as f64 / total as f64;
    assert!(rate >= 0.95, "coverage {covered}/{total}");
}
