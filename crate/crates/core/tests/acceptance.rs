//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! reports one line even when an earlier one fails.
//!
//! Set `AERIALNAV_BLESS=1` to rewrite the golden prompt files.

use std::collections::HashSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aerialnav_core::agent::{
    assemble_prompt, NavContext, NextLandmark, ObservationBundle, PromptMode, RulePlanner, View,
};
use aerialnav_core::agent::{ActionKind, AgentAction};
use aerialnav_core::elg::{self, AgentPose, ElgConfig, UnvisitedLandmark};
use aerialnav_core::geometry::{
    horizontal_angle, relative_motion, CameraModel, ElevationSign, PixelCoord, RelativeMotion,
    UnitVector3, WorldPoint,
};
use aerialnav_core::instruction::{parse_clauses, TurnDirection};
use aerialnav_core::metrics::{self, dtw, reference_path};
use aerialnav_core::sim::{
    ablation_table, lookahead_ablation, run_benchmark, step, vocabulary, BenchmarkConfig,
};
use aerialnav_core::slkb::{EmbeddingProvider, KnowledgeBase, LandmarkRecord, NgramEmbedder};
use aerialnav_core::verbalizer::{
    definite, describe_paths, describe_step, describe_steps, PathStep,
};
use nalgebra::{Rotation3, Vector3};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn within(limit: Duration, started: Instant, what: &str) {
    let took = started.elapsed();
    assert!(took < limit, "{what} took {took:?}, limit {limit:?}");
}

fn wrap(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

fn angle_diff(a: f64, b: f64) -> f64 {
    wrap(a - b).abs().min(360.0 - wrap(a - b).abs())
}

fn random_point(r: &mut ChaCha8Rng, span: f64) -> WorldPoint {
    WorldPoint::new(
        r.random_range(-span..span),
        r.random_range(-span..span),
        r.random_range(0.0..span / 5.0),
    )
}

fn geometry_round_trip() {
    let started = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let rot = Rotation3::from_euler_angles(
            r.random_range(-3.1..3.1),
            r.random_range(-1.5..1.5),
            r.random_range(-3.1..3.1),
        );
        let k = CameraModel::intrinsics(
            r.random_range(200.0..1200.0),
            r.random_range(200.0..1200.0),
            r.random_range(100.0..700.0),
            r.random_range(100.0..500.0),
        );
        let t = Vector3::new(
            r.random_range(-500.0..500.0),
            r.random_range(-500.0..500.0),
            r.random_range(0.0..120.0),
        );
        let cam = CameraModel::new(k, *rot.matrix(), t).unwrap();
        let z = r.random_range(1.0..150.0);
        let local = Vector3::new(r.random_range(-z..z), r.random_range(-z..z), z);
        let world = rot * local + t;
        let projected: Vector3<f64> = k * local / local.z;
        let back = cam
            .pixel_to_world(
                PixelCoord {
                    u: projected.x,
                    v: projected.y,
                },
                local.norm(),
            )
            .unwrap();
        worst = worst.max((back.to_vector() - world).norm());
    }
    assert!(worst < 1e-9, "worst round-trip error {worst:e} m");
    within(Duration::from_secs(5), started, "round trip");
}

fn random_unit(r: &mut ChaCha8Rng) -> UnitVector3 {
    loop {
        if let Ok(u) = UnitVector3::normalize(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        ) {
            if u.x().hypot(u.y()) > 1e-3 {
                return u;
            }
        }
    }
}

fn horizontal_angle_oracle() {
    let started = Instant::now();
    let mut r = rng(2);
    for _ in 0..10_000 {
        let (a, b) = (random_unit(&mut r), random_unit(&mut r));
        let got = horizontal_angle(&a, &b).unwrap();
        let oracle = b.y().atan2(b.x()).to_degrees() - a.y().atan2(a.x()).to_degrees();
        assert!(angle_diff(got, oracle) < 1e-9, "{got} vs {oracle}");
        assert!(got > -180.0 && got <= 180.0);
        let back = horizontal_angle(&b, &a).unwrap();
        if got.abs() < 180.0 - 1e-9 {
            assert!((got + back).abs() < 1e-9, "antisymmetry {got} {back}");
        }

        let (p, c, n) = (
            random_point(&mut r, 300.0),
            random_point(&mut r, 300.0),
            random_point(&mut r, 300.0),
        );
        let m = relative_motion(&p, &c, &n).unwrap();
        let d = n.to_vector() - c.to_vector();
        let lhs = m.distance * m.distance + m.elevation * m.elevation;
        assert!((lhs - d.norm_squared()).abs() <= 1e-9 * d.norm_squared().max(1.0));
    }
    within(Duration::from_secs(5), started, "angles");
}

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn slkb_retrieval_and_pruning() {
    let started = Instant::now();
    let vocab: Vec<String> = vocabulary().into_iter().map(|(d, _)| d).collect();
    let extra = ["north", "old", "tall", "twin", "east", "small"];
    let e = NgramEmbedder;
    let mut r = rng(3);
    for round in 0..1_000 {
        let mut kb = KnowledgeBase::default();
        while kb.len() < 200 {
            let base = vocab.choose(&mut r).unwrap();
            let desc = if r.random_bool(0.3) {
                format!("{} {base}", extra.choose(&mut r).unwrap())
            } else {
                base.clone()
            };
            for _ in 0..r.random_range(1..4) {
                let rec = LandmarkRecord::new(
                    desc.clone(),
                    random_point(&mut r, 300.0),
                    r.random_range(0.1..1.0),
                );
                kb.upsert(&rec, 1.0).unwrap();
            }
        }
        let keys: Vec<(String, Vec<f64>)> = kb
            .keys()
            .map(|k| (k.to_string(), e.embed(k).unwrap().components().to_vec()))
            .collect();
        let queries: Vec<String> = (0..3)
            .map(|_| {
                let words: Vec<&str> = vocab.choose(&mut r).unwrap().split(' ').collect();
                words[r.random_range(0..words.len())..].join(" ")
            })
            .collect();
        let got = kb.retrieve(&queries).unwrap();
        for (q, hit) in queries.iter().zip(got.iter()) {
            let qe = e.embed(q).unwrap();
            let scores: Vec<f64> = keys
                .iter()
                .map(|(_, v)| oracle_cosine(qe.components(), v))
                .collect();
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let winner = keys
                .iter()
                .zip(&scores)
                .find(|(_, s)| **s >= best - 1e-12)
                .unwrap()
                .0;
            let hit_score = scores[keys
                .iter()
                .position(|(k, _)| *k == hit.matched_description)
                .unwrap()];
            assert!(
                best - hit_score <= 1e-12,
                "round {round}: {q} → {} not argmax",
                hit.matched_description
            );
            let near_tie = scores.iter().filter(|s| best - **s <= 1e-12).count() > 1;
            if !near_tie {
                assert_eq!(hit.matched_description, winner.0);
            }
            assert_eq!(
                hit.positions.len(),
                kb.positions(&hit.matched_description).unwrap().len()
            );
        }

        let radius = r.random_range(5.0..80.0);
        kb.prune_positions(radius).unwrap();
        let once = kb.clone();
        assert_eq!(kb.prune_positions(radius).unwrap(), 0);
        assert_eq!(kb, once);
        for (_, list) in kb.entries() {
            for (i, a) in list.iter().enumerate() {
                for b in &list[i + 1..] {
                    assert!(a.position.distance(&b.position) > radius);
                }
            }
        }

        let mut bytes = Vec::new();
        kb.write_to(&mut bytes).unwrap();
        let loaded = KnowledgeBase::read_from(bytes.as_slice(), kb.provider().clone()).unwrap();
        assert_eq!(loaded, kb);
        let mut again = Vec::new();
        loaded.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    }
    within(Duration::from_secs(30), started, "knowledge base");
}

fn random_instance(r: &mut ChaCha8Rng) -> (AgentPose, Vec<UnvisitedLandmark>) {
    let pose = AgentPose::from_yaw(random_point(r, 300.0), r.random_range(-180.0..180.0));
    let layers = r.random_range(1..5);
    let unvisited = (0..layers)
        .map(|i| UnvisitedLandmark {
            name: format!("landmark {i}"),
            instruction_landmark: format!("landmark {i}"),
            candidates: (0..r.random_range(1..11))
                .map(|_| random_point(r, 300.0))
                .collect(),
        })
        .collect();
    (pose, unvisited)
}

/// Independent recomputation of per-step motions along `positions`.
fn oracle_motions(pose: &AgentPose, positions: &[WorldPoint]) -> Vec<(f64, f64, f64)> {
    let mut yaw = pose.heading.y().atan2(pose.heading.x()).to_degrees();
    let mut cur = pose.position;
    positions
        .iter()
        .map(|p| {
            let (dx, dy, dz) = (p.x - cur.x, p.y - cur.y, p.z - cur.z);
            let bearing = dy.atan2(dx).to_degrees();
            let theta = wrap(bearing - yaw);
            yaw = bearing;
            cur = *p;
            (theta, dx.hypot(dy), dz.abs())
        })
        .collect()
}

fn elg_structure() {
    let started = Instant::now();
    let config = ElgConfig::default();
    let wide = ElgConfig {
        n_ahead: config.n_ahead,
        n_next: usize::MAX,
        n_subseq: usize::MAX,
    };
    let mut r = rng(4);
    for _ in 0..1_000 {
        let (pose, unvisited) = random_instance(&mut r);
        let graph = elg::build(&pose, &unvisited, &config).unwrap();
        let layers = graph.layers();
        assert!(graph.layer_nodes(1).count() <= 6);
        for node in graph.nodes().iter().filter(|n| n.layer() >= 1) {
            assert!(graph.out_degree(node.id) <= 2);
        }
        let paths = elg::enumerate_paths(&graph, &pose);
        assert!(!paths.is_empty());
        assert!(paths.len() <= 6 * 2usize.pow(layers as u32 - 1));

        let full = elg::build(&pose, &unvisited, &wide).unwrap();
        let exhaustive = elg::enumerate_paths(&full, &pose);
        let product: usize = unvisited
            .iter()
            .take(layers)
            .map(|l| l.candidates.len())
            .product();
        assert_eq!(exhaustive.len(), product);
        let all: HashSet<Vec<usize>> = exhaustive
            .iter()
            .map(|p| p.nodes.iter().map(|n| n.index).collect())
            .collect();
        for p in &paths {
            assert!(!p.partial);
            assert!(all.contains(&p.nodes.iter().map(|n| n.index).collect::<Vec<_>>()));
            for (i, (id, pos)) in p.nodes.iter().zip(&p.positions).enumerate() {
                assert_eq!(*pos, unvisited[i].candidates[id.index]);
            }
            for (m, (theta, dist, elev)) in
                p.motions.iter().zip(oracle_motions(&pose, &p.positions))
            {
                assert!(angle_diff(m.theta, theta) < 1e-9);
                assert!((m.distance - dist).abs() < 1e-9);
                assert!((m.elevation - elev).abs() < 1e-9);
            }
        }
    }
    within(Duration::from_secs(30), started, "graph");
}

fn verbalizer_round_trip() {
    let started = Instant::now();
    let example = RelativeMotion {
        theta: 30.0,
        elevation: 4.0,
        elevation_sign: ElevationSign::Descend,
        distance: 10.0,
    };
    assert_eq!(
        describe_step(&example, "the intersection", true),
        "Turn left 30 degrees, move forward 10 meters and descend 4 meters to reach the intersection."
    );

    let vocab: Vec<String> = vocabulary().into_iter().map(|(d, _)| d).collect();
    let mut r = rng(5);
    for _ in 0..1_000 {
        let (pose, _) = random_instance(&mut r);
        let names: Vec<String> = (0..r.random_range(1..5))
            .map(|_| vocab.choose(&mut r).unwrap().clone())
            .collect();
        let positions: Vec<WorldPoint> =
            names.iter().map(|_| random_point(&mut r, 300.0)).collect();
        let mut facing = pose.heading;
        let mut cur = pose.position;
        let mut steps = Vec::new();
        for (name, p) in names.iter().zip(&positions) {
            let (motion, next) = elg::step_motion(&facing, &cur, p);
            steps.push(PathStep {
                landmark: definite(name),
                motion,
            });
            facing = next;
            cur = *p;
        }
        let text = describe_steps(&steps);
        let clauses = parse_clauses(&text);
        let landmarks: Vec<String> = clauses.iter().filter_map(|c| c.landmark.clone()).collect();
        assert_eq!(landmarks, names, "{text}");
        let turns: Vec<_> = clauses
            .iter()
            .filter(|c| c.landmark.is_some())
            .map(|c| c.turn)
            .collect();
        for (s, cue) in steps.iter().zip(turns) {
            let theta = s.motion.theta;
            if theta.abs() < 0.5 {
                assert!(
                    cue.is_none_or(|c| c.direction == TurnDirection::Straight),
                    "{text}"
                );
            } else {
                let c = cue.expect("turn parsed");
                let side = if theta > 0.0 {
                    TurnDirection::Left
                } else {
                    TurnDirection::Right
                };
                assert_eq!(c.direction, side, "{text}");
                assert_eq!(c.degrees, Some(theta.abs().round()), "{text}");
            }
        }
    }
    within(Duration::from_secs(10), started, "verbalizer");
}

fn dtw_matrix(a: &[WorldPoint], b: &[WorldPoint]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            d[i][j] =
                a[i - 1].distance(&b[j - 1]) + d[i - 1][j - 1].min(d[i - 1][j]).min(d[i][j - 1]);
        }
    }
    d[n][m]
}

fn dtw_memo(a: &[WorldPoint], b: &[WorldPoint]) -> f64 {
    fn go(
        i: usize,
        j: usize,
        a: &[WorldPoint],
        b: &[WorldPoint],
        memo: &mut Vec<Vec<Option<f64>>>,
    ) -> f64 {
        if i == 0 && j == 0 {
            return 0.0;
        }
        if i == 0 || j == 0 {
            return f64::INFINITY;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let best = go(i - 1, j - 1, a, b, memo)
            .min(go(i - 1, j, a, b, memo))
            .min(go(i, j - 1, a, b, memo));
        let v = a[i - 1].distance(&b[j - 1]) + best;
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a.len(), b.len(), a, b, &mut memo)
}

fn metrics_oracles() {
    let started = Instant::now();
    let mut r = rng(6);
    for _ in 0..1_000 {
        let a: Vec<WorldPoint> = (0..r.random_range(1..51))
            .map(|_| random_point(&mut r, 100.0))
            .collect();
        let b: Vec<WorldPoint> = (0..r.random_range(1..51))
            .map(|_| random_point(&mut r, 100.0))
            .collect();
        let got = dtw(&a, &b).unwrap();
        assert_eq!(got, dtw_matrix(&a, &b));
        assert_eq!(got, dtw_memo(&a, &b));
    }

    let config = BenchmarkConfig {
        episodes: 30,
        ..BenchmarkConfig::default()
    };
    let mut evaluated = 0;
    for max_steps in [4, 20, 150] {
        let mut c = config.clone();
        c.run.max_steps = max_steps;
        let outcome = run_benchmark(&c, &RulePlanner).unwrap();
        for (traj, ep) in &outcome.results {
            let res = metrics::evaluate(traj, ep, c.success_threshold).unwrap();
            let ndtw = metrics::ndtw(
                &traj.path_points(),
                &reference_path(ep),
                c.success_threshold,
            )
            .unwrap();
            assert!(res.sr <= res.osr);
            assert_eq!(res.sdtw, res.sr * ndtw);
            evaluated += 1;
        }
    }
    assert_eq!(evaluated, 90);
    within(Duration::from_secs(30), started, "metrics");
}

fn action_grid() {
    let pose = AgentPose::from_yaw(WorldPoint::new(3.0, -7.0, 12.0), 0.0);
    let turned = step(&pose, &AgentAction::new(ActionKind::TurnLeft, 6)).unwrap();
    assert_eq!(turned.yaw_degrees(), 90.0);
    assert_eq!((turned.heading.x(), turned.heading.y()), (0.0, 1.0));
    let mut r = rng(7);
    for _ in 0..200 {
        let yaw = 15.0 * r.random_range(-12..12) as f64;
        let start = AgentPose::from_yaw(random_point(&mut r, 300.0), yaw);
        let k = r.random_range(1..25);
        let moved = step(&start, &AgentAction::new(ActionKind::Forward, k)).unwrap();
        let d = moved.position.distance(&start.position);
        assert!(
            (d - 5.0 * k as f64).abs() < 1e-12 * d.max(1.0),
            "{d} vs {}",
            5 * k
        );
        let up = step(&start, &AgentAction::new(ActionKind::Ascend, k)).unwrap();
        let down = step(&up, &AgentAction::new(ActionKind::Descend, k)).unwrap();
        assert!((down.position.z - start.position.z).abs() < 1e-12);
    }
}

fn benchmark() {
    let config = BenchmarkConfig::default();
    let started = Instant::now();
    let first = run_benchmark(&config, &RulePlanner).unwrap();
    within(Duration::from_secs(60), started, "benchmark");
    let second = run_benchmark(&config, &RulePlanner).unwrap();
    let rep = &first.report;
    println!(
        "    episodes {} SR {:.1} OSR {:.1} SDTW {:.1} NE {:.2} (success NE {:.2}) in {:.2?}",
        rep.episodes.len(),
        rep.sr,
        rep.osr,
        rep.sdtw,
        rep.ne,
        first.success_ne().unwrap_or(f64::NAN),
        started.elapsed() / 2
    );
    assert_eq!(rep.episodes.len(), 100);
    assert!(rep.sr >= 90.0);
    assert!(rep.osr >= rep.sr);
    assert!(first.success_ne().unwrap() <= 20.0);
    assert_eq!(first.report, second.report);
    let trajectories = |o: &aerialnav_core::sim::BenchmarkOutcome| {
        o.results.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>()
    };
    assert_eq!(trajectories(&first), trajectories(&second));
}

fn lookahead() {
    let rows = lookahead_ablation(&BenchmarkConfig::default(), &RulePlanner, &[1, 2, 3]).unwrap();
    for line in ablation_table(&rows).lines() {
        println!("    {line}");
    }
    assert_eq!(rows.len(), 3);
    let sr = |n: usize| rows.iter().find(|(k, _)| *k == n).unwrap().1.report.sr;
    assert!(sr(2) >= sr(1), "SR(2) {} < SR(1) {}", sr(2), sr(1));
}

fn golden_context() -> NavContext {
    let pose = AgentPose::from_yaw(WorldPoint::new(10.0, 0.0, 30.0), 0.0);
    let mut ctx = NavContext::new(
        "Turn left 30 degrees, move forward 40 meters and descend 4 meters to reach the red brick tower, then \
         turn right 45 degrees and move toward the blue glass dome.",
        pose,
    );
    ctx.history = "Took off and rose to 30 meters.".into();
    let mut views = ObservationBundle::new();
    for (view, text) in [
        (View::Front, "red brick tower (42 m)"),
        (View::Left, "blue glass dome (80 m)"),
        (View::Right, ""),
        (View::Back, ""),
        (View::Top, ""),
        (View::Bottom, "grey steel crane (12 m)"),
    ] {
        views.set(view, aerialnav_core::agent::ViewContent::Text(text.into()));
    }
    ctx.observation = views;
    ctx
}

fn golden_path(mode: PromptMode) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{mode}.txt"))
}

fn input_labels(prompt: &str) -> Vec<String> {
    let input = prompt.split("---\nInput\n").nth(1).expect("input block");
    input
        .lines()
        .take_while(|l| *l != "---")
        .filter(|l| !l.starts_with("- ") && !l.is_empty())
        .filter_map(|l| l.split_once(':').map(|(k, _)| k.to_string()))
        .collect()
}

fn prompt_assembly() {
    let base = golden_context();
    let tower = WorldPoint::new(40.0, 20.0, 26.0);
    let dome = WorldPoint::new(70.0, -10.0, 26.0);
    let decoy = WorldPoint::new(-20.0, 30.0, 20.0);
    let unvisited = vec![
        UnvisitedLandmark {
            name: "red brick tower".into(),
            instruction_landmark: "red brick tower".into(),
            candidates: vec![tower, decoy],
        },
        UnvisitedLandmark {
            name: "blue glass dome".into(),
            instruction_landmark: "blue glass dome".into(),
            candidates: vec![dome],
        },
    ];
    let graph = elg::build(&base.pose, &unvisited, &ElgConfig::default()).unwrap();

    let mut with_elg = base.clone();
    with_elg.visited_landmarks = vec!["grey steel crane".into()];
    with_elg.path_descriptions = Some(describe_paths(&elg::enumerate_paths(&graph, &base.pose)));

    let mut with_next = base.clone();
    with_next.visited_landmarks = vec!["grey steel crane".into(), "red brick tower".into()];
    let (motion, _) = elg::step_motion(&base.pose.heading, &base.pose.position, &dome);
    with_next.next_landmark = Some(NextLandmark {
        name: "blue glass dome".into(),
        motion,
        position: dome,
    });

    let free = base;

    let expected_labels: [(PromptMode, &NavContext, &[&str]); 3] = [
        (
            PromptMode::WithElg,
            &with_elg,
            &[
                "Instruction",
                "History",
                "Visited Landmark",
                "Candidate Paths",
                "Current Views",
            ],
        ),
        (
            PromptMode::WithNextLandmark,
            &with_next,
            &[
                "Instruction",
                "History",
                "Visited Landmark",
                "The Next Landmark",
                "Current Views",
            ],
        ),
        (
            PromptMode::LandmarkFree,
            &free,
            &["Instruction", "History", "Current Views"],
        ),
    ];
    let bless = std::env::var_os("AERIALNAV_BLESS").is_some();
    for (mode, ctx, labels) in expected_labels {
        let prompt = assemble_prompt(ctx, mode).unwrap();
        assert_eq!(input_labels(&prompt), labels, "{mode}");
        let path = golden_path(mode);
        if bless {
            std::fs::write(&path, &prompt).unwrap();
        }
        let golden =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(prompt, golden, "{mode} differs from {}", path.display());
        for other in [
            PromptMode::WithElg,
            PromptMode::WithNextLandmark,
            PromptMode::LandmarkFree,
        ] {
            if other != mode {
                assert!(
                    assemble_prompt(ctx, other).is_err(),
                    "{mode} context accepted as {other}"
                );
            }
        }
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 10] = [
        ("geometry round trip", geometry_round_trip),
        (
            "horizontal angle and relative motion",
            horizontal_angle_oracle,
        ),
        (
            "knowledge base retrieval, pruning, persistence",
            slkb_retrieval_and_pruning,
        ),
        ("graph structure bounds", elg_structure),
        ("verbalizer round trip", verbalizer_round_trip),
        ("DTW oracles and metric identities", metrics_oracles),
        ("action grid", action_grid),
        ("synthetic benchmark", benchmark),
        ("lookahead ablation", lookahead),
        ("prompt assembly", prompt_assembly),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    panic::set_hook(Box::new(|info| eprintln!("    {info}")));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let ok = panic::catch_unwind(AssertUnwindSafe(check)).is_ok();
        println!(
            "criterion {:>2} {} {name} ({:.2?})",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            started.elapsed()
        );
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
