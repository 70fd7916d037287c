//! Per-step discovery and coverage rewards add up to the final grid counts.

use std::sync::Arc;

use tslam_core::corpus::{generate_shape, Family, ShapeRecipe};
use tslam_core::env::{EnvConfig, EnvState, ProbeSpec};
use tslam_core::policy::{run_episode, HeuristicPolicy, RandomPolicy};
use tslam_core::reward::{RewardConfig, RewardTracker, RewardVariant};
use tslam_core::rng::derive_seed;

// the counts come from the transition whatever the variant; disagreement and
// chamfer only add a slow surface estimate, so they are skipped here
const CHEAP: [RewardVariant; 6] = [
    RewardVariant::DiscoveryCoverage,
    RewardVariant::NoCoverage,
    RewardVariant::NoDiscovery,
    RewardVariant::Knn,
    RewardVariant::Points,
    RewardVariant::Contact,
];

#[test]
fn sums_equal_final_counts_on_100_random_episodes() {
    let spec = Arc::new(ProbeSpec::default());
    let cfg = EnvConfig::default();
    let shapes: Vec<_> = Family::ALL
        .iter()
        .enumerate()
        .map(|(i, &f)| Arc::new(generate_shape(&ShapeRecipe::random(f, i as u64), cfg.resolution).unwrap().grid))
        .collect();
    let mut touched_any = 0;
    for ep in 0..100u64 {
        let gt = shapes[ep as usize % shapes.len()].clone();
        let mut env = EnvState::reset(spec.clone(), cfg.clone(), gt.clone(), derive_seed(11, "ep", ep)).unwrap();
        let mut tracker = RewardTracker::new(RewardConfig {
            variant: CHEAP[ep as usize % CHEAP.len()],
            ..RewardConfig::default()
        });
        tracker.reset(None);
        let (mut sd, mut sc) = (0usize, 0usize);
        let mut actor = RandomPolicy::new();
        run_episode(&mut env, &mut actor, ep, |e, _, tr| {
            let parts = tracker.reward(tr, e.ground_truth());
            sd += parts.discovery;
            sc += parts.coverage;
        })
        .unwrap();
        assert_eq!(sd, env.observed().count(), "episode {ep}");
        assert_eq!(sc, env.visited().count(), "episode {ep}");
        assert_eq!(env.t(), cfg.horizon);
        touched_any += (sd > 0) as usize;
    }
    // the check is not vacuous
    assert!(touched_any > 10, "{touched_any} episodes touched the object");
}

#[test]
fn combined_reward_is_discovery_plus_weighted_coverage() {
    let spec = Arc::new(ProbeSpec::default());
    let cfg = EnvConfig::default();
    let gt = Arc::new(generate_shape(&ShapeRecipe::sphere(0.3), cfg.resolution).unwrap().grid);
    let mut env = EnvState::reset(spec, cfg, gt, 5).unwrap();
    let rc = RewardConfig::default();
    let mut tracker = RewardTracker::new(rc);
    tracker.reset(None);
    let mut total = 0.0;
    run_episode(&mut env, &mut HeuristicPolicy::new(), 5, |e, _, tr| {
        let p = tracker.reward(tr, e.ground_truth());
        assert_eq!(p.total, p.discovery as f64 + rc.lambda * p.coverage as f64);
        total += p.total;
    })
    .unwrap();
    let want = env.observed().count() as f64 + rc.lambda * env.visited().count() as f64;
    assert!((total - want).abs() < 1e-9 * want.max(1.0));
    assert!(env.observed().count() > 0);
}
