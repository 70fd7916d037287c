//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The experimental criteria need trained checkpoints. They are built once
//! under the cargo tmp dir (`acceptance/`) and reused while their digests
//! match, so only the first run pays for training (about two hours on one
//! core). Oracle criteria make the target fail; experimental ones only
//! report.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime};

use rand::Rng as _;
use toml::Value;

use tslam::formats::{read_checkpoint, POLICY_MAGIC, RECON_MAGIC};
use tslam::manifest::Manifest;
use tslam::pipeline::{read_eval_csv, EvalRow, PolicyChoice};
use tslam::{RunConfig, Workbench};
use tslam_core::corpus::{cup_inner_surface, generate_shape, hole_detected, Family, ShapeRecipe};
use tslam_core::env::{EnvConfig, EnvState, ProbeSpec};
use tslam_core::eval::{evaluate_shape, EvalShape};
use tslam_core::geometry::{brute_force_knn, nearest_neighbors, Mesh, VoxelGrid};
use tslam_core::math::{Mat3, Vec3};
use tslam_core::metrics::{chamfer_l2, normal_consistency, volumetric_iou};
use tslam_core::nn::{gradient_check, ParamSet, Tape, Tensor, TrilinearPlan};
use tslam_core::policy::{
    compute_gae, gaussian_bandit, run_episode, ActorCritic, NetConfig, ObsFeatures, RandomPolicy, BANDIT_OPTIMUM,
};
use tslam_core::recon::{ReconConfig, ReconNet};
use tslam_core::reward::{RewardConfig, RewardTracker, RewardVariant};
use tslam_core::rng::{derive_seed, rng_from_seed};

const MIN_REL_GAP: f64 = 0.05;
const MIN_NC_UPLIFT: f64 = 0.05;
const CONTACT_BAND: f64 = 0.10;
const RUNTIME_BUDGET_S: f64 = 4.0 * 3600.0;
const CHAMFER_REL_TOL: f64 = 0.05;
const ORTHO_NC_MAX: f64 = 1e-3;
const KNN_MAX_POINTS: usize = 500;
const CONSERVATION_EPISODES: u64 = 100;
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const GAE_TOL: f64 = 1e-12;
const GAE_MAX_LEN: usize = 50;
const BANDIT_BUDGET: usize = 5000;
const BANDIT_TOL: f64 = 0.2;
const BANDIT_SEEDS: u64 = 5;
const NONCONVEX_SEEDS: u64 = 5;
const NONCONVEX_MIN: usize = 3;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    oracle: bool,
}

fn art_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn base_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.set_key("paths.out", &Value::String(art_dir().display().to_string()))
        .unwrap();
    cfg
}

fn with(mut cfg: RunConfig, key: &str, v: Value) -> RunConfig {
    cfg.set_key(key, &v).unwrap();
    cfg
}

fn mtime(p: &Path) -> Option<SystemTime> {
    fs::metadata(p).and_then(|m| m.modified()).ok()
}

fn train_seconds(path: &Path, magic: &[u8; 4]) -> f64 {
    read_checkpoint(path, magic)
        .ok()
        .and_then(|ck| ck.meta.get("train_seconds").and_then(|s| s.parse().ok()))
        .unwrap_or(f64::NAN)
}

struct Artifacts {
    cfg: RunConfig,
    manifest: Manifest,
}

impl Artifacts {
    fn prepare() -> tslam::Result<Artifacts> {
        let cfg = base_config();
        let wb = Workbench::new(cfg.clone());
        let manifest = match Manifest::load(&wb.corpus_dir()) {
            Ok(m) => m,
            Err(_) => {
                eprintln!("acceptance: building corpus");
                wb.make_corpus(None)?
            }
        };
        for v in [
            RewardVariant::DiscoveryCoverage,
            RewardVariant::NoDiscovery,
            RewardVariant::NoCoverage,
            RewardVariant::Contact,
        ] {
            if wb.load_policy(&PolicyChoice::Learned(v), &manifest).is_ok() {
                continue;
            }
            eprintln!("acceptance: training {} policy", v.tag());
            let vw = Workbench::new(with(cfg.clone(), "reward.variant", Value::String(v.tag().into())));
            vw.train_explore(&mut |r| {
                if r.iter % 10 == 0 {
                    eprintln!("  iter {} observed {:.1}", r.iter, r.mean_observed);
                }
            })?;
        }
        if wb.load_recon(&manifest).is_err() {
            eprintln!("acceptance: training reconstruction network");
            wb.train_recon(&mut |r| eprintln!("  epoch {} heldout acc {:.4}", r.epoch, r.heldout_accuracy))?;
        }
        Ok(Artifacts { cfg, manifest })
    }

    fn checkpoint_paths(&self, choice: &PolicyChoice) -> Vec<PathBuf> {
        let wb = Workbench::new(self.cfg.clone());
        let mut v = vec![wb.recon_path(), wb.corpus_dir().join("manifest.toml")];
        if let PolicyChoice::Learned(r) = choice {
            v.push(wb.policy_path(*r));
        }
        v
    }

    /// Rows and wall-clock seconds of one evaluation, cached next to the
    /// CSV while it is newer than every checkpoint it depends on.
    fn eval(&self, choice: PolicyChoice, slug: &str, poses: usize) -> tslam::Result<(Vec<EvalRow>, f64)> {
        let cfg = with(self.cfg.clone(), "eval.poses", Value::Integer(poses as i64));
        let wb = Workbench::new(cfg);
        let csv = wb.out_dir().join(format!("eval-{slug}-{poses}p.csv"));
        let secs = csv.with_extension("seconds");
        if let (Some(t), Ok(rows), Ok(s)) = (mtime(&secs), read_eval_csv(&csv), fs::read_to_string(&secs)) {
            let fresh = self
                .checkpoint_paths(&choice)
                .iter()
                .all(|p| mtime(p).is_some_and(|m| m <= t));
            let digest_ok = rows.iter().all(|r| r.config_digest == wb.cfg.digest());
            if let (true, true, Ok(s)) = (fresh, digest_ok, s.trim().parse::<f64>()) {
                return Ok((rows, s));
            }
        }
        eprintln!("acceptance: evaluating {slug} at {poses} poses");
        let t0 = Instant::now();
        let (rows, path) = wb.eval(&choice, false)?;
        let s = t0.elapsed().as_secs_f64();
        assert_eq!(path, csv);
        fs::write(&secs, format!("{s:.1}\n")).map_err(|e| tslam::WorkbenchError::io(&secs, e))?;
        Ok((rows, s))
    }
}

fn mean(rows: &[EvalRow], f: impl Fn(&EvalRow) -> f64) -> f64 {
    rows.iter().map(f).sum::<f64>() / rows.len() as f64
}

fn rel_gap(hi: f64, lo: f64) -> f64 {
    (hi - lo) / lo.abs()
}

fn experimental(art: &Artifacts) -> tslam::Result<Vec<Line>> {
    let g = |r: &EvalRow| r.iou_grid;
    let learned = PolicyChoice::Learned;
    let (tslam4, tslam_eval_s) = art.eval(learned(RewardVariant::DiscoveryCoverage), "tslam", 4)?;
    let (tslam8, _) = art.eval(learned(RewardVariant::DiscoveryCoverage), "tslam", 8)?;
    let (random, _) = art.eval(PolicyChoice::Random, "random", 4)?;
    let (heuristic, _) = art.eval(PolicyChoice::Heuristic, "heuristic", 4)?;
    let (no_disc, _) = art.eval(learned(RewardVariant::NoDiscovery), "no-discovery", 4)?;
    let (no_cov, _) = art.eval(learned(RewardVariant::NoCoverage), "no-coverage", 4)?;
    let (contact, _) = art.eval(learned(RewardVariant::Contact), "contact", 4)?;
    let mut lines = Vec::new();

    let (t, h, r) = (mean(&tslam4, g), mean(&heuristic, g), mean(&random, g));
    let wb = Workbench::new(art.cfg.clone());
    let runtime = train_seconds(&wb.policy_path(RewardVariant::DiscoveryCoverage), POLICY_MAGIC)
        + train_seconds(&wb.recon_path(), RECON_MAGIC)
        + tslam_eval_s;
    let shapes = art.manifest.split(tslam_core::corpus::Split::HeldOut).count();
    let (gap_th, gap_hr) = (rel_gap(t, h), rel_gap(h, r));
    lines.push(Line {
        id: 1,
        name: "ordering tslam > heuristic > random",
        pass: shapes == 20
            && gap_th >= MIN_REL_GAP
            && gap_hr >= MIN_REL_GAP
            && runtime <= RUNTIME_BUDGET_S,
        detail: format!(
            "grid IoU {t:.4} / {h:.4} / {r:.4}, gaps {:.0}% / {:.0}%, {shapes} shapes x {} seeds, pipeline {:.0} s",
            gap_th * 100.0,
            gap_hr * 100.0,
            art.cfg.eval.seeds,
            runtime
        ),
        oracle: false,
    });

    let (ir, nc_g, nc_r) = (
        mean(&tslam4, |r| r.iou_recon),
        mean(&tslam4, |r| r.nc_grid),
        mean(&tslam4, |r| r.nc_recon),
    );
    lines.push(Line {
        id: 2,
        name: "reconstruction uplift",
        pass: ir >= t && nc_r - nc_g >= MIN_NC_UPLIFT,
        detail: format!("IoU recon {ir:.4} vs grid {t:.4}; NC recon {nc_r:.4} vs grid {nc_g:.4}"),
        oracle: false,
    });

    let (nd, nc, ct) = (mean(&no_disc, g), mean(&no_cov, g), mean(&contact, g));
    let contact_rel = (ct - r).abs() / r;
    lines.push(Line {
        id: 3,
        name: "ablation ordering",
        pass: nd < nc && contact_rel <= CONTACT_BAND,
        detail: format!(
            "-discovery {nd:.4} < -coverage {nc:.4}; #contact {ct:.4} vs random {r:.4} ({:.0}% apart)",
            contact_rel * 100.0
        ),
        oracle: false,
    });

    let t8 = mean(&tslam8, g);
    lines.push(Line {
        id: 4,
        name: "pose monotonicity",
        pass: t8 >= t,
        detail: format!("8-pose {t8:.4} vs 4-pose {t:.4}"),
        oracle: false,
    });

    let (holes, cups) = nonconvexity(art)?;
    lines.push(Line {
        id: 9,
        name: "non-convex features",
        pass: holes >= NONCONVEX_MIN && cups >= NONCONVEX_MIN,
        detail: format!("torus hole {holes}/{NONCONVEX_SEEDS} seeds, cup interior {cups}/{NONCONVEX_SEEDS} seeds"),
        oracle: false,
    });
    Ok(lines)
}

fn nonconvexity(art: &Artifacts) -> tslam::Result<(usize, usize)> {
    let cfg = with(art.cfg.clone(), "eval.poses", Value::Integer(8));
    let wb = Workbench::new(cfg.clone());
    let policy = wb.load_policy(&PolicyChoice::Learned(RewardVariant::DiscoveryCoverage), &art.manifest)?;
    let ec = cfg.eval_config();
    let spec = Arc::new(cfg.probe_spec());
    let n = cfg.env.resolution;
    let torus = generate_shape(&ShapeRecipe::torus(0.3, 0.08), n)?;
    let cup_recipe = ShapeRecipe::cup(0.3, 0.5);
    let cup = generate_shape(&cup_recipe, n)?;
    let inner = cup_inner_surface(&cup_recipe, &cup.grid)?;
    let shape = |s: &tslam_core::corpus::GeneratedShape| EvalShape {
        mesh: Arc::new(s.mesh.clone()),
        grid: Arc::new(s.grid.clone()),
    };
    let (ts, cs) = (shape(&torus), shape(&cup));
    let (mut holes, mut cups) = (0, 0);
    for s in 0..NONCONVEX_SEEDS {
        let seed = derive_seed(cfg.seed, "nonconvex", s);
        let mut actor = policy.actor();
        let ev = evaluate_shape(&spec, &ec, &ts, actor.as_mut(), None, seed)?;
        holes += hole_detected(&ev.observed) as usize;
        let ev = evaluate_shape(&spec, &ec, &cs, actor.as_mut(), None, seed)?;
        cups += (inner.count_and(&ev.observed) > 0) as usize;
    }
    Ok((holes, cups))
}

fn block(g: &mut VoxelGrid, lo: [usize; 3], hi: [usize; 3]) {
    for k in lo[2]..hi[2] {
        for j in lo[1]..hi[1] {
            for i in lo[0]..hi[0] {
                g.set(i, j, k, true);
            }
        }
    }
}

fn plane(z: f64) -> Mesh {
    let v = vec![
        Vec3::new(-0.5, -0.5, z),
        Vec3::new(0.5, -0.5, z),
        Vec3::new(0.5, 0.5, z),
        Vec3::new(-0.5, 0.5, z),
    ];
    Mesh::from_triangles(v, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
}

fn metric_oracles() -> Line {
    let mut a = VoxelGrid::workspace(8);
    block(&mut a, [0, 0, 0], [2, 2, 2]);
    let mut b = VoxelGrid::workspace(8);
    block(&mut b, [1, 0, 0], [3, 2, 2]);
    let iou = volumetric_iou(&a, &b).unwrap();

    let t = 0.05;
    let cd = chamfer_l2(&plane(0.0), &plane(t), 10_000, 3).unwrap();
    let cd_rel = (cd - t * t).abs() / (t * t);

    let vertical = plane(0.0)
        .map_vertices(|v| Mat3::rot_x(std::f64::consts::FRAC_PI_2).apply(v))
        .unwrap();
    let nc = normal_consistency(&plane(0.0), &vertical, 2000, 0).unwrap();

    let mut rng = rng_from_seed(41);
    let mut knn_ok = 0;
    let cases = 40;
    for c in 0..cases {
        let k = [1, 3, 8, 16][c % 4];
        let n_ref = rng.random_range(k..=KNN_MAX_POINTS);
        let n_q = rng.random_range(1..=KNN_MAX_POINTS);
        let mut pts = |n| -> Vec<Vec3> {
            (0..n)
                .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let (r, q) = (pts(n_ref), pts(n_q));
        knn_ok += (nearest_neighbors(&q, &r, k).unwrap() == brute_force_knn(&q, &r, k).unwrap()) as usize;
    }
    Line {
        id: 5,
        name: "metric oracles",
        pass: iou == 1.0 / 3.0 && cd_rel < CHAMFER_REL_TOL && nc < ORTHO_NC_MAX && knn_ok == cases,
        detail: format!(
            "IoU {iou}, chamfer off by {:.2}%, orthogonal NC {nc:.1e}, kNN {knn_ok}/{cases} instances equal",
            cd_rel * 100.0
        ),
        oracle: true,
    }
}

fn reward_conservation() -> Line {
    let spec = Arc::new(ProbeSpec::default());
    let cfg = EnvConfig::default();
    let shapes: Vec<_> = Family::ALL
        .iter()
        .enumerate()
        .map(|(i, &f)| Arc::new(generate_shape(&ShapeRecipe::random(f, 100 + i as u64), cfg.resolution).unwrap().grid))
        .collect();
    let mut exact = 0;
    let mut touched = 0;
    for ep in 0..CONSERVATION_EPISODES {
        let gt = shapes[ep as usize % shapes.len()].clone();
        let mut env = EnvState::reset(spec.clone(), cfg.clone(), gt, derive_seed(12, "ep", ep)).unwrap();
        let mut tracker = RewardTracker::new(RewardConfig::default());
        tracker.reset(None);
        let (mut sd, mut sc) = (0, 0);
        run_episode(&mut env, &mut RandomPolicy::new(), ep, |e, _, tr| {
            let p = tracker.reward(tr, e.ground_truth());
            sd += p.discovery;
            sc += p.coverage;
        })
        .unwrap();
        exact += (sd == env.observed().count() && sc == env.visited().count()) as usize;
        touched += (sd > 0) as usize;
    }
    Line {
        id: 6,
        name: "reward conservation",
        pass: exact as u64 == CONSERVATION_EPISODES,
        detail: format!("{exact}/{CONSERVATION_EPISODES} episodes exact ({touched} made contact)"),
        oracle: true,
    }
}

fn rand_tensor(seed: u64, shape: &[usize]) -> Tensor {
    let mut r = rng_from_seed(seed);
    let mut t = Tensor::zeros(shape);
    for v in &mut t.data {
        *v = r.random_range(-1.0..1.0);
    }
    t
}

fn gradient_errors() -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();

    let mut rng = rng_from_seed(1);
    let mut p = ParamSet::new();
    p.add_linear(&mut rng, "l1", 6, 5, 1.0);
    p.add_linear(&mut rng, "l2", 5, 4, 1.0);
    p.add_linear(&mut rng, "l3", 4, 3, 1.0);
    let x = rand_tensor(2, &[7, 6]);
    let target = rand_tensor(3, &[21]).data;
    out.push((
        "linear/tanh/relu/sigmoid/mse",
        gradient_check(&p, FD_STEP, 64, |t| {
            let xi = t.input(x.clone());
            let (p0, p1) = (t.param(0), t.param(1));
            let h = t.linear(xi, p0, p1);
            let h = t.tanh(h);
            let (p2, p3) = (t.param(2), t.param(3));
            let h = t.linear(h, p2, p3);
            let h = t.relu(h);
            let (p4, p5) = (t.param(4), t.param(5));
            let h = t.linear(h, p4, p5);
            let h = t.sigmoid(h);
            t.mse(h, target.clone())
        }),
    ));

    let mut conv = 0.0f64;
    for (k, stride, pad) in [(3, 1, 1), (2, 2, 0), (3, 2, 1), (1, 1, 0)] {
        let mut rng = rng_from_seed(20 + k as u64);
        let mut p = ParamSet::new();
        p.add_conv(&mut rng, "c1", 3, 1, 2);
        p.add_conv(&mut rng, "c2", k, 2, 3);
        p.tensors_mut()[1] = rand_tensor(5, &[2]);
        let x = rand_tensor(6, &[2, 4, 4, 4, 1]);
        conv = conv.max(gradient_check(&p, FD_STEP, 40, |t| {
            let xi = t.input(x.clone());
            let (p0, p1) = (t.param(0), t.param(1));
            let h = t.conv3d(xi, p0, p1, 1, 1);
            let h = t.tanh(h);
            let (p2, p3) = (t.param(2), t.param(3));
            let h = t.conv3d(h, p2, p3, stride, pad);
            let n = t.value(h).len();
            let flat = t.reshape(h, &[n]);
            t.mse(flat, vec![0.3; n])
        }));
    }
    out.push(("conv3d/reshape", conv));

    let mut p = ParamSet::new();
    p.add("lattice", rand_tensor(7, &[1, 3, 3, 3, 2]));
    p.add("side", rand_tensor(8, &[4, 3]));
    let plan = Arc::new(TrilinearPlan {
        corners: (0..4u32)
            .map(|i| [0, 1, 3, 4, 9, 10, 12, 13].map(|c| c + i % 2))
            .collect(),
        weights: (0..4)
            .map(|i| {
                let f = 0.1 + 0.2 * i as f64;
                let g = [1.0 - f, f];
                std::array::from_fn(|j| g[j & 1] * g[(j >> 1) & 1] * g[(j >> 2) & 1])
            })
            .collect(),
    });
    out.push((
        "trilinear/concat",
        gradient_check(&p, FD_STEP, 60, |t| {
            let p0 = t.param(0);
            let f = t.trilinear(p0, plan.clone());
            let s = t.param(1);
            let c = t.concat(&[f, s]);
            let c = t.tanh(c);
            t.mse(c, (0..20).map(|i| i as f64 * 0.05).collect())
        }),
    ));

    let mut p = ParamSet::new();
    p.add("mean", rand_tensor(10, &[6, 3]));
    p.add("log_std", Tensor::new(&[3], vec![-0.5, 0.2, -1.0]).unwrap());
    p.add("value", rand_tensor(11, &[6]));
    let u = rand_tensor(12, &[6, 3]).data;
    let old: Vec<f64> = {
        let mut t = Tape::new(&p);
        let (p0, p1) = (t.param(0), t.param(1));
        let lp = t.gaussian_log_prob(p0, p1, u.clone());
        t.value(lp)
            .data
            .iter()
            .zip([0.05, -0.05, 0.5, -0.5, 0.0, 0.1])
            .map(|(v, d)| v + d)
            .collect()
    };
    let adv = vec![1.0, -0.5, 0.7, -1.2, 0.3, 2.0];
    out.push((
        "gaussian/ppo-clip/entropy/clamp",
        gradient_check(&p, FD_STEP, 64, |t| {
            let p1 = t.param(1);
            let l = t.clamp(p1, -5.0, 2.0);
            let p0 = t.param(0);
            let lp = t.gaussian_log_prob(p0, l, u.clone());
            let pg = t.ppo_clip(lp, old.clone(), adv.clone(), 0.2);
            let p2 = t.param(2);
            let vl = t.mse(p2, vec![0.5; 6]);
            let ent = t.gaussian_entropy(l);
            t.weighted_sum(&[(pg, 1.0), (vl, 0.5), (ent, -1e-3)])
        }),
    ));

    let mut p = ParamSet::new();
    p.add("z", rand_tensor(13, &[10]));
    let y: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
    out.push((
        "bce-logits",
        gradient_check(&p, FD_STEP, 10, |t| {
            let z = t.param(0);
            t.bce_logits(z, y.clone())
        }),
    ));

    let mut ac = 0.0f64;
    for (kernel, shared) in [(2, true), (3, true), (2, false)] {
        let cfg = NetConfig {
            grid_res: 16,
            pool: 2,
            channels: [2, 3, 3, 2, 2, 2],
            kernel,
            hidden: 6,
            action_dim: 3,
            pose_dim: 3,
            init_log_std: -0.5,
            shared_encoder: shared,
        };
        let mut net = ActorCritic::new(cfg.clone(), 4).unwrap();
        let mut r = rng_from_seed(5);
        for t in net.params.tensors_mut() {
            for v in &mut t.data {
                *v += r.random_range(-0.2..0.2);
            }
        }
        let obs: Vec<ObsFeatures> = (0..3)
            .map(|_| ObsFeatures {
                grid: (0..cfg.input_res().pow(3)).map(|_| r.random_bool(0.3) as u8).collect(),
                pose: (0..cfg.pose_dim).map(|_| r.random_range(-1.0..1.0)).collect(),
            })
            .collect();
        let refs: Vec<&ObsFeatures> = obs.iter().collect();
        let (gt, pt) = cfg.batch_inputs(&refs);
        let u: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
        ac = ac.max(gradient_check(&net.params, FD_STEP, 24, |t| {
            let (gi, pi) = (t.input(gt.clone()), t.input(pt.clone()));
            let h = cfg.heads(t, gi, pi);
            let lp = t.gaussian_log_prob(h.mean, h.log_std, u.clone());
            let lp = t.mean(lp);
            let v = t.mse(h.value, vec![0.5, -0.2, 1.0]);
            t.weighted_sum(&[(lp, -1.0), (v, 0.5)])
        }));
    }
    out.push(("actor-critic", ac));

    let cfg = ReconConfig {
        resolution: 8,
        channels: vec![3, 4],
        hidden: 6,
        hidden_layers: 1,
        points: 64,
        ..ReconConfig::default()
    };
    let mut net = ReconNet::new(cfg, 12).unwrap();
    let mut rng = rng_from_seed(13);
    let names = net.params.names().to_vec();
    for (name, t) in names.iter().zip(net.params.tensors_mut()) {
        if name.ends_with(".b") {
            for v in &mut t.data {
                *v = rng.random_range(-0.3..0.3);
            }
        }
    }
    let mut x = VoxelGrid::workspace(8);
    for _ in 0..80 {
        x.set(rng.random_range(0..8), rng.random_range(0..8), rng.random_range(0..8), true);
    }
    let xt = net.grid_tensor(&[&x]).unwrap();
    let pts: Vec<(usize, Vec3)> = (0..16)
        .map(|_| (0, Vec3::new(rng.random(), rng.random(), rng.random())))
        .collect();
    let labels: Vec<f64> = (0..16).map(|i| (i % 2) as f64).collect();
    let plans = net.plans(&pts);
    out.push((
        "recon encoder/decoder",
        gradient_check(&net.params, 1e-6, 30, |t| {
            let xi = t.input(xt.clone());
            let st = net.stages(t, xi);
            let z = net.decode(t, &st, &plans);
            t.bce_logits(z, labels.clone())
        }),
    ));
    out
}

/// A_t = sum over l of (gamma lambda)^l delta_{t+l}, cut after a terminal step.
fn gae_oracle(r: &[f64], v: &[f64], done: &[bool], last: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|t| {
            let mut a = 0.0;
            let mut w = 1.0;
            for l in t..n {
                let next = if done[l] { 0.0 } else if l + 1 < n { v[l + 1] } else { last };
                a += w * (r[l] + gamma * next - v[l]);
                if done[l] {
                    break;
                }
                w *= gamma * lambda;
            }
            a
        })
        .collect()
}

fn gradient_suite() -> Line {
    let errs = gradient_errors();
    let worst = errs.iter().cloned().fold(("", 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    let fd_ok = errs.iter().all(|(_, e)| *e < FD_TOL);
    let mut rng = rng_from_seed(77);
    let mut gae_err = 0.0f64;
    for len in 1..=GAE_MAX_LEN {
        let r: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let d: Vec<bool> = (0..len).map(|_| rng.random_bool(0.1)).collect();
        let last = rng.random_range(-2.0..2.0);
        let (gamma, lambda) = (rng.random_range(0.8..1.0), rng.random_range(0.8..1.0));
        let (adv, _) = compute_gae(&r, &v, &d, last, gamma, lambda);
        for (a, b) in adv.iter().zip(gae_oracle(&r, &v, &d, last, gamma, lambda)) {
            gae_err = gae_err.max((a - b).abs());
        }
    }
    Line {
        id: 7,
        name: "gradient suite",
        pass: fd_ok && gae_err < GAE_TOL,
        detail: format!(
            "{} layer groups, worst rel err {:.1e} ({}); GAE max err {gae_err:.1e} on buffers 1..={GAE_MAX_LEN}",
            errs.len(),
            worst.1,
            worst.0
        ),
        oracle: true,
    }
}

fn bandit() -> Line {
    let finals: Vec<f64> = (0..BANDIT_SEEDS).map(|s| gaussian_bandit(s, BANDIT_BUDGET)).collect();
    let ok = finals.iter().filter(|a| (*a - BANDIT_OPTIMUM).abs() <= BANDIT_TOL).count();
    Line {
        id: 8,
        name: "ppo bandit",
        pass: ok as u64 == BANDIT_SEEDS,
        detail: format!(
            "{ok}/{BANDIT_SEEDS} seeds within {BANDIT_TOL} of {BANDIT_OPTIMUM} after {BANDIT_BUDGET} steps: {:?}",
            finals.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
        oracle: true,
    }
}

fn episode_timing() -> Line {
    let env = RunConfig::default().env;
    let secs = env.episode_seconds();
    Line {
        id: 10,
        name: "episode timing",
        pass: env.horizon == 200 && env.step_ms == 30 && secs == 6.0,
        detail: format!("{} steps x {} ms = {secs} s", env.horizon, env.step_ms),
        oracle: true,
    }
}

fn main() {
    let mut lines = vec![metric_oracles(), reward_conservation(), gradient_suite(), bandit(), episode_timing()];
    match Artifacts::prepare().and_then(|a| experimental(&a)) {
        Ok(l) => lines.extend(l),
        Err(e) => {
            for (id, name) in [
                (1, "ordering tslam > heuristic > random"),
                (2, "reconstruction uplift"),
                (3, "ablation ordering"),
                (4, "pose monotonicity"),
                (9, "non-convex features"),
            ] {
                lines.push(Line {
                    id,
                    name,
                    pass: false,
                    detail: format!("artifacts unavailable: {e}"),
                    oracle: false,
                });
            }
        }
    }
    lines.sort_by_key(|l| l.id);
    for l in &lines {
        println!("{} [{:>2}] {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    if lines.iter().any(|l| l.oracle && !l.pass) {
        std::process::exit(1);
    }
}
