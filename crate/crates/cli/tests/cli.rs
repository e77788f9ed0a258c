use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aerialnav_core::elg::{self, AgentPose};
use aerialnav_core::geometry::WorldPoint;
use aerialnav_core::instruction::parse_landmarks;
use aerialnav_core::sim::{Episode, World};
use aerialnav_core::slkb::{EmbeddingProvider, KnowledgeBase, LandmarkRecord, NgramEmbedder};
use aerialnav_core::verbalizer::describe_paths;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_aerialnav"));
    c.env_remove("AERIALNAV_LLM_ENDPOINT")
        .env_remove("RUST_LOG");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    run(args, dir).status.code().unwrap()
}

/// World, episodes and knowledge base in a fresh directory.
fn fixture() -> TempDir {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(
        &[
            "--seed",
            "5",
            "gen-world",
            "--out",
            "world.json",
            "--landmarks",
            "10",
            "--distractors",
            "2",
            "--episodes",
            "3",
            "--episode-length",
            "2",
            "--separation",
            "60",
            "--episodes-out",
            "episodes.json",
        ],
        p,
    );
    ok(
        &["build-kb", "--world", "world.json", "--out", "kb.jsonl"],
        p,
    );
    dir
}

fn episodes(dir: &Path) -> Vec<Episode> {
    serde_json::from_str(&fs::read_to_string(dir.join("episodes.json")).unwrap()).unwrap()
}

fn csvs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn gen_world_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(&["--seed", "9", "gen-world", "--out", "a.json"], p);
    ok(&["--seed", "9", "gen-world", "--out", "b.json"], p);
    assert_eq!(
        fs::read(p.join("a.json")).unwrap(),
        fs::read(p.join("b.json")).unwrap()
    );
}

#[test]
fn gen_world_rejects_infeasible_density() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &[
            "gen-world",
            "--out",
            "w.json",
            "--landmarks",
            "300",
            "--min-spacing",
            "100",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot place"));
}

#[test]
fn gen_world_named_distractors() {
    let dir = TempDir::new().unwrap();
    ok(
        &[
            "gen-world",
            "--out",
            "w.json",
            "--distractor",
            "traffic light:3",
        ],
        dir.path(),
    );
    let w: World =
        serde_json::from_str(&fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    assert_eq!(w.instances("traffic light").count(), 3);
}

#[test]
fn bad_flags_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&["gen-world"], dir.path()), 2);
    assert_eq!(code(&["frobnicate"], dir.path()), 2);
    assert_eq!(
        code(
            &["--config", "missing.toml", "gen-world", "--out", "w.json"],
            dir.path()
        ),
        2
    );
}

#[test]
fn build_kb_covers_world_and_is_pruned() {
    let dir = fixture();
    let w: World =
        serde_json::from_str(&fs::read_to_string(dir.path().join("world.json")).unwrap()).unwrap();
    let kb = KnowledgeBase::load(dir.path().join("kb.jsonl")).unwrap();
    let keys: Vec<&str> = kb.keys().collect();
    for d in w.descriptions() {
        assert!(keys.contains(&d), "{d} missing");
    }
    for (_, list) in kb.entries() {
        for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                assert!(a.position.distance(&b.position) > 20.0);
            }
        }
    }
}

#[test]
fn build_kb_rejects_empty_world() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("empty.json"),
        r#"{"seed":0,"bounds":{"min":{"x":0,"y":0,"z":0},"max":{"x":10,"y":10,"z":10}},"landmarks":[]}"#,
    )
    .unwrap();
    assert_eq!(
        code(
            &["build-kb", "--world", "empty.json", "--out", "kb.jsonl"],
            dir.path()
        ),
        2
    );
}

#[test]
fn build_kb_from_log() {
    let dir = TempDir::new().unwrap();
    let lines: Vec<String> = [
        ("red brick tower", 0.0),
        ("red brick tower", 5.0),
        ("blue glass dome", 50.0),
    ]
    .iter()
    .map(|(d, x)| {
        serde_json::to_string(&LandmarkRecord::new(*d, WorldPoint::new(*x, 0.0, 0.0), 1.0)).unwrap()
    })
    .collect();
    fs::write(dir.path().join("log.jsonl"), lines.join("\n")).unwrap();
    ok(
        &["build-kb", "--log", "log.jsonl", "--out", "kb.jsonl"],
        dir.path(),
    );
    let kb = KnowledgeBase::load(dir.path().join("kb.jsonl")).unwrap();
    assert_eq!(kb.positions("red brick tower").unwrap().len(), 1);
    assert_eq!(kb.len(), 2);
}

fn single_candidate_kb(dir: &Path) {
    let mut kb = KnowledgeBase::default();
    kb.upsert(
        &LandmarkRecord::new("red brick tower", WorldPoint::new(40.0, 30.0, 5.0), 1.0),
        0.9,
    )
    .unwrap();
    kb.upsert(
        &LandmarkRecord::new("blue glass dome", WorldPoint::new(-60.0, 10.0, 0.0), 1.0),
        0.9,
    )
    .unwrap();
    kb.save(dir.join("kb.jsonl")).unwrap();
}

#[test]
fn plan_single_candidate_matches_library() {
    let dir = TempDir::new().unwrap();
    single_candidate_kb(dir.path());
    let instruction = "Fly to the red brick tower.";
    let out = ok(
        &[
            "plan",
            "--kb",
            "kb.jsonl",
            "--instruction",
            instruction,
            "--yaw",
            "15",
        ],
        dir.path(),
    );
    let lines: Vec<&str> = out.lines().filter(|l| l.starts_with("Path ")).collect();
    assert_eq!(lines.len(), 1);

    let kb = KnowledgeBase::load(dir.path().join("kb.jsonl")).unwrap();
    let pose = AgentPose::from_yaw(WorldPoint::ORIGIN, 15.0);
    let retrieved = kb.retrieve(&parse_landmarks(instruction)).unwrap();
    let unvisited = elg::select_unvisited(&retrieved, 0, 2);
    let graph = elg::build(&pose, &unvisited, &Default::default()).unwrap();
    let d = describe_paths(&elg::enumerate_paths(&graph, &pose));
    assert_eq!(lines[0], format!("Path 0: {}", d.get(0).unwrap().text));
}

#[test]
fn plan_unknown_landmark_uses_best_key() {
    let dir = TempDir::new().unwrap();
    single_candidate_kb(dir.path());
    let out = ok(
        &[
            "plan",
            "--kb",
            "kb.jsonl",
            "--instruction",
            "Fly to the blue dome.",
        ],
        dir.path(),
    );
    let e = NgramEmbedder;
    let q = e.embed("blue dome").unwrap();
    let best = ["red brick tower", "blue glass dome"]
        .into_iter()
        .max_by(|a, b| {
            q.cosine(&e.embed(a).unwrap())
                .total_cmp(&q.cosine(&e.embed(b).unwrap()))
        })
        .unwrap();
    assert!(out.contains(&format!("\"matched_description\": \"{best}\"")));
}

#[test]
fn plan_prompt_has_sections() {
    let dir = TempDir::new().unwrap();
    single_candidate_kb(dir.path());
    let out = ok(
        &[
            "plan",
            "--kb",
            "kb.jsonl",
            "--instruction",
            "Fly to the red brick tower.",
            "--prompt",
        ],
        dir.path(),
    );
    assert!(out.contains("## Prompt\n"));
    assert!(out.contains("Candidate Paths:\n- Path 0: "));
}

#[test]
fn run_is_deterministic_and_capped() {
    let dir = fixture();
    let p = dir.path();
    let args = [
        "run",
        "--world",
        "world.json",
        "--episodes",
        "episodes.json",
        "--kb",
        "kb.jsonl",
    ];
    ok(&[&args[..], &["--out-dir", "a"]].concat(), p);
    ok(&[&args[..], &["--out-dir", "b", "--jobs", "3"]].concat(), p);
    let (a, b) = (csvs(&p.join("a")), csvs(&p.join("b")));
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    ok(
        &[&args[..], &["--out-dir", "c", "--max-steps", "5"]].concat(),
        p,
    );
    for f in csvs(&p.join("c")) {
        assert!(fs::read_to_string(f).unwrap().lines().count() - 1 <= 5);
    }
}

#[test]
fn run_llm_without_backend_is_usage_error() {
    let dir = fixture();
    let args = [
        "run",
        "--world",
        "world.json",
        "--episodes",
        "episodes.json",
        "--out-dir",
        "t",
        "--planner",
        "llm",
    ];
    assert_eq!(code(&args, dir.path()), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = fixture();
    let p = dir.path();
    fs::write(p.join("cfg.toml"), "n_ahead = 3\nmax_steps = 40\n").unwrap();
    let out = run(
        &[
            "--config",
            "cfg.toml",
            "run",
            "--world",
            "world.json",
            "--episodes",
            "episodes.json",
            "--kb",
            "kb.jsonl",
            "--out-dir",
            "t",
            "--n-ahead",
            "1",
        ],
        p,
    );
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let header = err.lines().find(|l| l.starts_with("# config ")).unwrap();
    let cfg: serde_json::Value = serde_json::from_str(&header["# config ".len()..]).unwrap();
    assert_eq!(cfg["n_ahead"], 1);
    assert_eq!(cfg["max_steps"], 40);
}

/// Trajectory CSV that jumps straight through every waypoint.
fn retrace_csv(e: &Episode) -> String {
    let mut s = String::from("step,x,y,z,heading_deg,action,repetitions\n");
    for (i, p) in e.ground_truth_path.iter().enumerate() {
        s.push_str(&format!("{i},{},{},{},0,forward,1\n", p.x, p.y, p.z));
    }
    s.push_str(&format!(
        "{},{},{},{},0,stop,1\n",
        e.ground_truth_path.len(),
        e.goal.x,
        e.goal.y,
        e.goal.z
    ));
    s
}

#[test]
fn eval_perfect_retrace_and_means() {
    let dir = fixture();
    let p = dir.path();
    fs::create_dir(p.join("perfect")).unwrap();
    for e in episodes(p) {
        fs::write(
            p.join("perfect").join(format!("{}.csv", e.episode_id)),
            retrace_csv(&e),
        )
        .unwrap();
    }
    let out = ok(
        &[
            "eval",
            "--trajectories",
            "perfect",
            "--episodes",
            "episodes.json",
            "--report",
            "r.json",
        ],
        p,
    );
    assert!(out.lines().last().unwrap().contains("100.0"));

    ok(
        &[
            "run",
            "--world",
            "world.json",
            "--episodes",
            "episodes.json",
            "--kb",
            "kb.jsonl",
            "--out-dir",
            "flown",
            "--max-steps",
            "6",
        ],
        p,
    );
    ok(
        &[
            "eval",
            "--trajectories",
            "flown",
            "--episodes",
            "episodes.json",
            "--report",
            "r.json",
        ],
        p,
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    let eps = report["episodes"].as_array().unwrap();
    let mean = |k: &str| eps.iter().map(|e| e[k].as_f64().unwrap()).sum::<f64>() / eps.len() as f64;
    assert!((report["sr"].as_f64().unwrap() - 100.0 * mean("sr")).abs() < 1e-9);
    assert!((report["osr"].as_f64().unwrap() - 100.0 * mean("osr")).abs() < 1e-9);
    assert!((report["sdtw"].as_f64().unwrap() - 100.0 * mean("sdtw")).abs() < 1e-9);
    assert!((report["ne"].as_f64().unwrap() - mean("ne")).abs() < 1e-9);
}

#[test]
fn eval_missing_episode_file() {
    let dir = fixture();
    let p = dir.path();
    ok(
        &[
            "run",
            "--world",
            "world.json",
            "--episodes",
            "episodes.json",
            "--kb",
            "kb.jsonl",
            "--out-dir",
            "t",
        ],
        p,
    );
    assert_eq!(
        code(
            &["eval", "--trajectories", "t", "--episodes", "nope.json"],
            p
        ),
        2
    );
}

#[test]
fn export_row_count_and_order() {
    let dir = fixture();
    let p = dir.path();
    ok(
        &[
            "run",
            "--world",
            "world.json",
            "--episodes",
            "episodes.json",
            "--kb",
            "kb.jsonl",
            "--out-dir",
            "t",
        ],
        p,
    );
    ok(
        &[
            "export",
            "--trajectories",
            "t",
            "--world",
            "world.json",
            "--out",
            "a.csv",
        ],
        p,
    );
    ok(
        &[
            "export",
            "--trajectories",
            "t",
            "--world",
            "world.json",
            "--out",
            "b.csv",
        ],
        p,
    );
    let a = fs::read_to_string(p.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(p.join("b.csv")).unwrap());
    let traj_rows: usize = csvs(&p.join("t"))
        .iter()
        .map(|f| fs::read_to_string(f).unwrap().lines().count() - 1)
        .sum();
    let w: World =
        serde_json::from_str(&fs::read_to_string(p.join("world.json")).unwrap()).unwrap();
    assert_eq!(a.lines().count() - 1, traj_rows + w.landmarks.len());
    let help = ok(&["export", "--help"], p);
    assert!(help.contains("heading_deg"));
}
