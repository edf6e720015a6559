//! Monte Carlo checks of the synthetic world against its analytic expectations.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use segiso::geo::GeoPoint;
use segiso::ideology::{fit_ca, score_accounts, select_training, TrainingConfig};
use segiso::isolation::{online_isolation_batch, OfflineContext, OnlineEgo, Variant};
use segiso::partisan::{Demographics, PartisanPosterior, Party, PosteriorSource};
use segiso::roster::VoterRecord;
use segiso::stats::median;
use segiso::synth::{self, World, WorldConfig};

fn true_posteriors(world: &World) -> HashMap<String, PartisanPosterior> {
    world
        .truth
        .iter()
        .map(|t| (t.voter_id.clone(), PartisanPosterior::degenerate(t.party, PosteriorSource::Registered)))
        .collect()
}

fn sample_egos(world: &World, n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<String> = sample(&mut rng, world.voters.len(), n.min(world.voters.len()))
        .into_iter()
        .map(|i| world.voters[i].voter_id.clone())
        .collect();
    ids.sort();
    ids
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn party_means(scores: &[segiso::isolation::IsolationScore]) -> [f64; 2] {
    [Party::Dem, Party::Rep].map(|p| {
        let v: Vec<f64> = scores.iter().filter(|s| s.party == p).map(|s| s.value).collect();
        mean(&v)
    })
}

fn small_graph(cfg: WorldConfig) -> WorldConfig {
    WorldConfig {
        n_accounts: 200,
        n_elites_per_party: 10,
        friends_min: 1,
        friends_max: 3,
        ..cfg
    }
}

#[test]
fn random_mixing_offline_isolation_equals_party_share() {
    let cfg = small_graph(WorldConfig {
        n_voters: 12_000,
        n_states: 1,
        spatial_homophily: 0.0,
        state_tilt: 0.0,
        seed: 21,
        ..WorldConfig::default()
    });
    let world = synth::generate(&cfg).unwrap();
    let ctx = OfflineContext::new(&world.voters, &true_posteriors(&world)).unwrap();
    let all: Vec<String> = world.voters.iter().map(|v| v.voter_id.clone()).collect();
    let batch = ctx.isolation_batch(&all, 100, Variant::Discrete).unwrap();
    let [dem, rep] = party_means(&batch.scores);
    assert!((dem - 0.45).abs() < 0.02, "Dem {dem}");
    assert!((rep - 0.45).abs() < 0.02, "Rep {rep}");
    for t in &world.truth {
        assert!((t.expected_offline - cfg.party_mix[t.party.index()]).abs() < 1e-12);
    }
}

#[test]
fn disjoint_clusters_isolate_interior_voters() {
    let cfg = small_graph(WorldConfig {
        n_voters: 12_000,
        n_states: 1,
        spatial_homophily: 1.0,
        seed: 22,
        ..WorldConfig::default()
    });
    let world = synth::generate(&cfg).unwrap();
    // Precinct ids end in row and column digits; regions are 3x3 precinct blocks.
    let interior: Vec<String> = world
        .voters
        .iter()
        .filter(|v| {
            let p = v.precinct_id.as_deref().unwrap();
            let digits = &p[p.len() - 4..];
            let (row, col): (usize, usize) = (digits[..2].parse().unwrap(), digits[2..].parse().unwrap());
            row % 3 == 1 && col % 3 == 1
        })
        .map(|v| v.voter_id.clone())
        .collect();
    assert!(interior.len() > 500);
    let ctx = OfflineContext::new(&world.voters, &true_posteriors(&world)).unwrap();
    let batch = ctx.isolation_batch(&interior, 10, Variant::Discrete).unwrap();
    let m = mean(&batch.scores.iter().map(|s| s.value).collect::<Vec<_>>());
    assert!(m > 0.99, "interior mean {m}");
}

#[test]
fn neighborhood_size_changes_medians_within_predicted_bound() {
    let cfg = small_graph(WorldConfig {
        n_voters: 20_000,
        n_states: 1,
        seed: 23,
        ..WorldConfig::default()
    });
    let world = synth::generate(&cfg).unwrap();
    let ctx = OfflineContext::new(&world.voters, &true_posteriors(&world)).unwrap();
    let egos = sample_egos(&world, 1500, 5);
    let precinct: HashMap<&str, &str> = world
        .voters
        .iter()
        .map(|v| (v.voter_id.as_str(), v.precinct_id.as_deref().unwrap()))
        .collect();
    let index = &ctx.indexes()[0];
    let mut observed = Vec::new();
    let mut predicted = Vec::new();
    for k in [500, 1000] {
        let batch = ctx.isolation_batch(&egos, k, Variant::Probabilistic).unwrap();
        // Generator expectation: mean generative share of the ego's party over
        // the same neighbors.
        let pred: Vec<(Party, f64)> = batch
            .scores
            .iter()
            .map(|s| {
                let nb = index.knn(&s.ego_id, k).unwrap();
                let e: f64 = nb
                    .neighbors
                    .iter()
                    .map(|n| world.generative_priors[precinct[n.voter_id]][s.party.index()])
                    .sum::<f64>()
                    / nb.neighbors.len() as f64;
                (s.party, e)
            })
            .collect();
        let med = |v: Vec<f64>| median(&v).unwrap();
        observed.push([Party::Dem, Party::Rep].map(|p| {
            med(batch.scores.iter().filter(|s| s.party == p).map(|s| s.value).collect())
        }));
        predicted.push([Party::Dem, Party::Rep].map(|p| med(pred.iter().filter(|x| x.0 == p).map(|x| x.1).collect())));
    }
    for p in 0..2 {
        let obs = (observed[0][p] - observed[1][p]).abs();
        let bound = (predicted[0][p] - predicted[1][p]).abs() + 0.01;
        assert!(obs <= bound, "party {p}: observed {obs} vs bound {bound}");
    }
}

#[test]
fn checkerboard_scores_concentrate_at_one_half() {
    let side = 100;
    let voters: Vec<VoterRecord> = (0..side * side)
        .map(|i| {
            let (r, c) = (i / side, i % side);
            VoterRecord {
                voter_id: format!("V{i:05}"),
                first: String::new(),
                last: String::new(),
                city: String::new(),
                state: "EQ".into(),
                location: Some(GeoPoint::new(r as f64 * 0.01, c as f64 * 0.01).unwrap()),
                party_label: None,
                demographics: Demographics::default(),
                precinct_id: None,
            }
        })
        .collect();
    let post: HashMap<String, PartisanPosterior> = (0..side * side)
        .map(|i| {
            let party = if (i / side + i % side) % 2 == 0 { Party::Dem } else { Party::Rep };
            (format!("V{i:05}"), PartisanPosterior::degenerate(party, PosteriorSource::Registered))
        })
        .collect();
    let ctx = OfflineContext::new(&voters, &post).unwrap();
    let ids: Vec<String> = voters.iter().map(|v| v.voter_id.clone()).collect();
    let batch = ctx.isolation_batch(&ids, 1000, Variant::Discrete).unwrap();
    assert_eq!(batch.scores.len(), side * side);
    let m = mean(&batch.scores.iter().map(|s| s.value).collect::<Vec<_>>());
    assert!((m - 0.5).abs() < 0.02, "mean {m}");
}

/// Same-party share of each linkable account's friends, restricted to `scored`.
fn same_party_friend_share(world: &World, scored: Option<&HashSet<&str>>) -> [f64; 2] {
    let party_of: HashMap<&str, Party> = world
        .truth
        .iter()
        .filter_map(|t| t.account_id.as_deref().map(|a| (a, t.party)))
        .collect();
    let mut per_ego: HashMap<&str, (usize, usize)> = HashMap::new();
    for e in &world.edges {
        let (Some(&src), Some(&dst)) = (party_of.get(e.src.as_str()), party_of.get(e.dst.as_str())) else {
            continue;
        };
        if scored.is_some_and(|s| !s.contains(e.dst.as_str())) {
            continue;
        }
        let c = per_ego.entry(e.src.as_str()).or_default();
        c.0 += (src == dst) as usize;
        c.1 += 1;
    }
    [Party::Dem, Party::Rep].map(|p| {
        let fr: Vec<f64> = per_ego
            .iter()
            .filter(|(a, _)| party_of[**a] == p)
            .map(|(_, (s, n))| *s as f64 / *n as f64)
            .collect();
        mean(&fr)
    })
}

fn account_party_shares(world: &World) -> [f64; 3] {
    let mut c = [0usize; 3];
    for t in world.truth.iter().filter(|t| t.account_id.is_some()) {
        c[t.party.index()] += 1;
    }
    let n: usize = c.iter().sum();
    c.map(|x| x as f64 / n as f64)
}

fn graph_world(follow: f64, seed: u64) -> World {
    synth::generate(&WorldConfig {
        n_voters: 20_000,
        n_states: 2,
        n_accounts: 6_000,
        follow_homophily: follow,
        friend_homophily: None,
        friends_min: 20,
        friends_max: 40,
        seed,
        ..WorldConfig::default()
    })
    .unwrap()
}

#[test]
fn unit_follow_homophily_gives_party_share_online() {
    let world = graph_world(1.0, 31);
    let shares = account_party_shares(&world);
    let scored: HashSet<&str> = world
        .truth
        .iter()
        .filter(|t| t.engaged)
        .filter_map(|t| t.account_id.as_deref())
        .collect();
    let got = same_party_friend_share(&world, Some(&scored));
    assert!((got[0] - shares[0]).abs() < 0.02, "Dem {} vs {}", got[0], shares[0]);
    assert!((got[1] - shares[1]).abs() < 0.02, "Rep {} vs {}", got[1], shares[1]);
    for t in world.truth.iter().filter(|t| t.linkable) {
        let e = t.expected_online.unwrap();
        assert!((e - shares[t.party.index()]).abs() < 1e-12);
    }
}

#[test]
fn extreme_follow_homophily_isolates_online() {
    let world = graph_world(1e9, 32);
    let got = same_party_friend_share(&world, None);
    assert!(got[0] > 0.999 && got[1] > 0.999, "{got:?}");
}

#[test]
fn scored_friend_fraction_tracks_scoreability() {
    let world = graph_world(5.0, 33);
    let training = select_training(&world.edges, &world.elites, &TrainingConfig::default()).unwrap();
    let fit = fit_ca(&training, 3, &world.elites).unwrap();
    let scored = score_accounts(&fit, &world.edges, &world.elites, 3);
    let classes: HashMap<String, Party> = scored.scores.iter().map(|s| (s.account_id.clone(), Party::Dem)).collect();
    let mut friends: HashMap<String, Vec<String>> = HashMap::new();
    let accounts: HashSet<&str> = world.accounts.iter().map(|a| a.account_id.as_str()).collect();
    for e in world.edges.iter().filter(|e| accounts.contains(e.dst.as_str())) {
        friends.entry(e.src.clone()).or_default().push(e.dst.clone());
    }
    let egos: Vec<OnlineEgo> = world
        .truth
        .iter()
        .filter(|t| t.linkable)
        .map(|t| OnlineEgo {
            ego_id: t.voter_id.clone(),
            account_id: t.account_id.clone().unwrap(),
            party: Party::Dem,
        })
        .collect();
    let out = online_isolation_batch(&egos, &friends, &classes, 1);
    let pooled = out.pooled_fraction().unwrap();
    let scoreability = 0.3;
    assert!((pooled - scoreability).abs() < 0.03, "pooled {pooled}");
}
