use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use aerialnav_core::agent::{
    assemble_prompt, LlmPlanner, NavContext, Planner, PromptMode, RulePlanner,
};
use aerialnav_core::elg::{self, AgentPose};
use aerialnav_core::geometry::WorldPoint;
use aerialnav_core::llm::HttpBackend;
use aerialnav_core::metrics::evaluate_batch;
use aerialnav_core::sim::{
    ablation_table, build_offline_kb, generate_world, lookahead_ablation, read_trajectory_csv,
    run_episode, synthesize_episode, write_trajectory_csv, BenchmarkConfig, Bounds, CoverageParams,
    Episode, EpisodeParams, NamedDistractor, ObserveParams, SimError, Trajectory, World,
    WorldParams,
};
use aerialnav_core::slkb::{KnowledgeBase, LandmarkParser, LandmarkRecord, RuleLandmarkParser};
use aerialnav_core::verbalizer::describe_paths;
use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{PlannerKind, Settings};
use crate::CliError;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parameter problems are usage errors, everything else is a runtime failure.
fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidParams(_)
        | SimError::InfeasibleDensity { .. }
        | SimError::EpisodeTooLong { .. }
        | SimError::NoEpisode(_) => usage(e),
        other => runtime(other),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file =
        File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn parse_distractor(s: &str) -> Result<NamedDistractor, String> {
    let (desc, count) = s
        .rsplit_once(':')
        .ok_or_else(|| format!("expected DESCRIPTION:COUNT, got `{s}`"))?;
    let count = count
        .trim()
        .parse()
        .map_err(|e| format!("bad count in `{s}`: {e}"))?;
    Ok(NamedDistractor {
        description: desc.trim().to_string(),
        count,
    })
}

#[derive(Debug, Args)]
pub struct GenWorldArgs {
    /// World JSON output path.
    #[arg(long)]
    out: PathBuf,
    /// Distinct landmark descriptions to draw.
    #[arg(long, default_value_t = 20)]
    landmarks: usize,
    /// Extra same-description instances per drawn description.
    #[arg(long, default_value_t = 0)]
    distractors: usize,
    /// Place a named description exactly COUNT times (DESCRIPTION:COUNT).
    #[arg(long = "distractor", value_parser = parse_distractor)]
    named: Vec<NamedDistractor>,
    /// Minimum horizontal spacing between landmarks (meters).
    #[arg(long, default_value_t = 30.0)]
    min_spacing: f64,
    /// Side of the square map (meters).
    #[arg(long, default_value_t = 600.0)]
    size: f64,
    /// Maximum landmark height (meters).
    #[arg(long, default_value_t = 30.0)]
    max_height: f64,
    /// Episodes to synthesize in this world.
    #[arg(long, default_value_t = 0)]
    episodes: usize,
    /// Landmarks per episode.
    #[arg(long, default_value_t = 3)]
    episode_length: usize,
    /// Minimum bearing separation between a waypoint and its same-description
    /// instances (degrees).
    #[arg(long)]
    separation: Option<f64>,
    /// Episode JSON output path; required with --episodes.
    #[arg(long)]
    episodes_out: Option<PathBuf>,
}

pub fn gen_world(args: &GenWorldArgs, s: &Settings) -> Result<(), CliError> {
    let bounds = Bounds::new(
        WorldPoint::ORIGIN,
        WorldPoint::new(args.size, args.size, args.max_height),
    )
    .map_err(sim_error)?;
    let params = WorldParams {
        landmark_count: args.landmarks,
        bounds,
        min_spacing: args.min_spacing,
        distractors: args.distractors,
        named_distractors: args.named.clone(),
    };
    let world = generate_world(s.seed, &params).map_err(sim_error)?;
    if args.episodes > 0 {
        let out = args
            .episodes_out
            .as_ref()
            .ok_or_else(|| usage("--episodes needs --episodes-out"))?;
        let eparams = EpisodeParams {
            min_distractor_separation: args.separation,
            ..EpisodeParams::default()
        };
        let episodes = (0..args.episodes as u64)
            .map(|i| {
                synthesize_episode(
                    &world,
                    s.seed.wrapping_add(i),
                    args.episode_length,
                    &eparams,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(sim_error)?;
        write_json(out, &episodes)?;
    }
    write_json(&args.out, &world)?;
    log::info!(
        "wrote {} landmarks to {}",
        world.landmarks.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct BuildKbArgs {
    /// World JSON to sweep.
    #[arg(long, conflicts_with = "log", required_unless_present = "log")]
    world: Option<PathBuf>,
    /// Landmark-record JSON lines to ingest.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Knowledge-base output path.
    #[arg(long)]
    out: PathBuf,
    /// Sweep lane spacing (meters).
    #[arg(long, default_value_t = 50.0)]
    spacing: f64,
    /// Sweep altitude (meters).
    #[arg(long, default_value_t = 40.0)]
    altitude: f64,
    /// Observation range (meters).
    #[arg(long, default_value_t = 100.0)]
    range: f64,
}

pub fn build_kb(args: &BuildKbArgs, s: &Settings) -> Result<(), CliError> {
    let mut kb = KnowledgeBase::default();
    if let Some(path) = &args.world {
        let world: World = read_json(path)?;
        if world.landmarks.is_empty() {
            return Err(usage(format!("{} has no landmarks", path.display())));
        }
        let params = CoverageParams {
            spacing: args.spacing,
            altitude: args.altitude,
            observe: ObserveParams {
                range: args.range,
                ..s.observe()
            },
            merge_threshold: s.merge_threshold,
            prune_radius: s.prune_radius,
            seed: s.seed,
        };
        build_offline_kb(&world, &mut kb, &params).map_err(sim_error)?;
    } else if let Some(path) = &args.log {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let mut count = 0;
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let record: LandmarkRecord = serde_json::from_str(line)
                .map_err(|e| usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
            kb.upsert(&record, s.merge_threshold)
                .map_err(|e| usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
            count += 1;
        }
        if count == 0 {
            return Err(usage(format!("{} has no records", path.display())));
        }
        kb.prune_positions(s.prune_radius).map_err(usage)?;
    }
    kb.save(&args.out).map_err(runtime)?;
    log::info!(
        "wrote {} keys, {} positions",
        kb.len(),
        kb.total_positions()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Knowledge-base file.
    #[arg(long)]
    kb: PathBuf,
    /// Navigation instruction.
    #[arg(long)]
    instruction: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z: f64,
    /// Heading in degrees, counterclockwise from +x.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    yaw: f64,
    /// Instruction landmarks already visited.
    #[arg(long, default_value_t = 0)]
    visited: usize,
    /// Also print the assembled candidate-path prompt.
    #[arg(long)]
    prompt: bool,
}

pub fn plan(args: &PlanArgs, s: &Settings) -> Result<(), CliError> {
    let kb =
        KnowledgeBase::load(&args.kb).map_err(|e| usage(format!("{}: {e}", args.kb.display())))?;
    let landmarks = RuleLandmarkParser.parse(&args.instruction).map_err(usage)?;
    if landmarks.is_empty() {
        return Err(usage("the instruction names no landmarks"));
    }
    if args.visited >= landmarks.len() {
        return Err(usage(format!(
            "--visited {} leaves no landmark of {}",
            args.visited,
            landmarks.len()
        )));
    }
    let pose = AgentPose::from_yaw(WorldPoint::new(args.x, args.y, args.z), args.yaw);
    let retrieved = kb.retrieve(&landmarks).map_err(usage)?;
    let unvisited = elg::select_unvisited(&retrieved, args.visited, s.n_ahead);
    let graph = elg::build(&pose, &unvisited, &s.elg()).map_err(runtime)?;
    let paths = elg::enumerate_paths(&graph, &pose);
    let descriptions = describe_paths(&paths);

    let mut out = std::io::stdout().lock();
    let pretty = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("json value");
    let mut text = String::new();
    text.push_str("## Retrieved landmarks\n");
    text.push_str(&pretty(&serde_json::to_value(&retrieved).map_err(runtime)?));
    text.push_str("\n## Graph\n");
    text.push_str(&pretty(&elg::debug_export(&graph, &paths)));
    text.push_str("\n## Path descriptions\n");
    for d in descriptions.iter() {
        text.push_str(&format!("Path {}: {}\n", d.path_id, d.text));
    }
    if args.prompt {
        let mut ctx = NavContext::new(args.instruction.clone(), pose);
        ctx.visited_landmarks = landmarks[..args.visited].to_vec();
        ctx.path_descriptions = Some(descriptions);
        text.push_str("## Prompt\n");
        text.push_str(&assemble_prompt(&ctx, PromptMode::WithElg).map_err(runtime)?);
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    out.write_all(text.as_bytes()).map_err(runtime)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// World JSON.
    #[arg(long)]
    world: PathBuf,
    /// Episode JSON (array).
    #[arg(long)]
    episodes: PathBuf,
    /// Knowledge-base file; without it a coverage sweep of the world seeds one.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Directory for `<episode_id>.csv` trajectory files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also insert observations into the knowledge base while flying.
    #[arg(long)]
    online_memory: bool,
    /// Episodes flown in parallel; each gets a private copy of the knowledge base.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn planner(s: &Settings) -> Result<Box<dyn Planner>, CliError> {
    match s.planner {
        PlannerKind::Rule => Ok(Box::new(RulePlanner)),
        PlannerKind::Llm => {
            let settings = s.llm_settings().ok_or_else(|| {
                usage("planner llm needs an [llm] section in --config or AERIALNAV_LLM_ENDPOINT")
            })?;
            Ok(Box::new(LlmPlanner::new(
                HttpBackend::new(settings).map_err(usage)?,
            )))
        }
    }
}

fn echo_config(s: &Settings) {
    let mut shown = s.clone();
    if let Some(llm) = shown.llm.as_mut() {
        llm.api_key_env = llm.api_key_env.as_ref().map(|_| "<set>".into());
    }
    eprintln!(
        "# config {}",
        serde_json::to_string(&shown).expect("settings serialize")
    );
}

pub fn run(args: &RunArgs, s: &Settings) -> Result<(), CliError> {
    if args.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let world: World = read_json(&args.world)?;
    let episodes: Vec<Episode> = read_json(&args.episodes)?;
    if episodes.is_empty() {
        return Err(usage(format!(
            "{} has no episodes",
            args.episodes.display()
        )));
    }
    let planner = planner(s)?;
    let kb = match &args.kb {
        Some(path) => {
            KnowledgeBase::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let mut kb = KnowledgeBase::default();
            let params = CoverageParams {
                observe: s.observe(),
                merge_threshold: s.merge_threshold,
                prune_radius: s.prune_radius,
                seed: s.seed,
                ..CoverageParams::default()
            };
            build_offline_kb(&world, &mut kb, &params).map_err(sim_error)?;
            kb
        }
    };
    fs::create_dir_all(&args.out_dir).map_err(runtime)?;
    echo_config(s);
    let config = aerialnav_core::sim::RunConfig {
        online_memory: args.online_memory,
        ..s.run_config()
    };

    let fly = |i: usize| {
        let mut private = kb.clone();
        let run = aerialnav_core::sim::RunConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..config.clone()
        };
        run_episode(
            &world,
            &episodes[i],
            planner.as_ref(),
            &mut private,
            &RuleLandmarkParser,
            &run,
        )
    };
    let mut results: Vec<Option<Result<Trajectory, Box<aerialnav_core::sim::EpisodeFailure>>>> =
        (0..episodes.len()).map(|_| None).collect();
    if args.jobs == 1 {
        for (i, slot) in results.iter_mut().enumerate() {
            *slot = Some(fly(i));
        }
    } else {
        let n = episodes.len();
        let jobs = args.jobs.min(n);
        let chunks: Vec<Vec<(usize, _)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    let fly = &fly;
                    scope.spawn(move || {
                        (j..n)
                            .step_by(jobs)
                            .map(|i| (i, fly(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        for (i, r) in chunks.into_iter().flatten() {
            results[i] = Some(r);
        }
    }

    let mut failure = None;
    let mut stdout = std::io::stdout().lock();
    for (episode, result) in episodes.iter().zip(results) {
        let (traj, error) = match result.expect("every episode flown") {
            Ok(t) => (t, None),
            Err(f) => (f.trajectory, Some(f.error)),
        };
        let path = args.out_dir.join(format!("{}.csv", episode.episode_id));
        let file = File::create(&path)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_trajectory_csv(&traj, &mut w).map_err(runtime)?;
        w.flush().map_err(runtime)?;
        let status = match (&error, traj.status) {
            (Some(_), _) => "failed",
            (None, aerialnav_core::sim::TerminalStatus::Stopped) => "stopped",
            (None, aerialnav_core::sim::TerminalStatus::MaxSteps) => "max_steps",
        };
        writeln!(
            stdout,
            "{} {} steps {status}",
            episode.episode_id,
            traj.rows.len()
        )
        .map_err(runtime)?;
        if let Some(e) = error {
            failure.get_or_insert(format!("{}: {e}", episode.episode_id));
        }
    }
    match failure {
        Some(f) => Err(runtime(f)),
        None => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trajectory CSV files or directories of them; file stems are episode ids.
    #[arg(long, required = true, num_args = 1..)]
    trajectories: Vec<PathBuf>,
    /// Episode JSON (array).
    #[arg(long)]
    episodes: PathBuf,
    /// JSON report output path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Success radius (meters); overrides the settings file.
    #[arg(long)]
    success_threshold: Option<f64>,
}

fn csv_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| usage(format!("{}: {e}", input.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(usage(format!(
                "no such trajectory file {}",
                input.display()
            )));
        }
    }
    if files.is_empty() {
        return Err(usage("no trajectory CSV files given"));
    }
    Ok(files)
}

fn read_csv(path: &Path, start: AgentPose) -> Result<Trajectory, CliError> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    read_trajectory_csv(BufReader::new(file), start)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn eval(args: &EvalArgs, s: &Settings) -> Result<(), CliError> {
    let threshold = args.success_threshold.unwrap_or(s.success_threshold);
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(usage("success threshold must be non-negative"));
    }
    let episodes: Vec<Episode> = read_json(&args.episodes)?;
    let mut batch = Vec::new();
    for path in csv_files(&args.trajectories)? {
        let id = stem(&path);
        let episode = episodes
            .iter()
            .find(|e| e.episode_id == id)
            .ok_or_else(|| usage(format!("no episode `{id}` in {}", args.episodes.display())))?;
        let traj = read_csv(&path, episode.start_pose)?;
        if traj.rows.is_empty() {
            return Err(usage(format!("{} has no rows", path.display())));
        }
        batch.push((traj, episode.clone()));
    }
    let report = evaluate_batch(&batch, threshold).map_err(runtime)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        write_json(path, &report.to_json())?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Trajectory CSV files or directories of them.
    #[arg(long, required = true, num_args = 1..)]
    trajectories: Vec<PathBuf>,
    /// World JSON.
    #[arg(long)]
    world: PathBuf,
    /// Plot-ready CSV output path.
    #[arg(long)]
    out: PathBuf,
}

pub const EXPORT_HEADER: &str = "kind,id,step,x,y,z,heading_deg,action,repetitions,description";

pub fn export(args: &ExportArgs) -> Result<(), CliError> {
    let world: World = read_json(&args.world)?;
    let mut text = String::new();
    text.push_str(EXPORT_HEADER);
    text.push('\n');
    let origin = AgentPose::from_yaw(WorldPoint::ORIGIN, 0.0);
    for path in csv_files(&args.trajectories)? {
        let id = stem(&path);
        for r in read_csv(&path, origin)?.rows {
            let p = r.pose.position;
            text.push_str(&format!(
                "trajectory,{id},{},{},{},{},{},{},{},\n",
                r.step,
                p.x,
                p.y,
                p.z,
                r.pose.yaw_degrees(),
                r.action.kind,
                r.action.repetitions
            ));
        }
    }
    for (i, l) in world.landmarks.iter().enumerate() {
        let p = l.position;
        text.push_str(&format!(
            "landmark,{i},,{},{},{},,,,{}\n",
            p.x,
            p.y,
            p.z,
            l.description.replace(',', " ")
        ));
    }
    fs::write(&args.out, text)
        .map_err(|e| runtime(format!("cannot write {}: {e}", args.out.display())))
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Episodes per lookahead value.
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Lookahead values to compare.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    lookahead: Vec<usize>,
    /// JSON report output path.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn bench(args: &BenchArgs, s: &Settings) -> Result<(), CliError> {
    if args.lookahead.contains(&0) {
        return Err(usage("lookahead values must be at least 1"));
    }
    echo_config(s);
    let config = BenchmarkConfig {
        episodes: args.episodes,
        seed: s.seed,
        run: s.run_config(),
        success_threshold: s.success_threshold,
        coverage: CoverageParams {
            observe: s.observe(),
            merge_threshold: s.merge_threshold,
            prune_radius: s.prune_radius,
            ..CoverageParams::default()
        },
        ..BenchmarkConfig::default()
    };
    let planner = planner(s)?;
    let rows = lookahead_ablation(&config, planner.as_ref(), &args.lookahead).map_err(sim_error)?;
    print!("{}", ablation_table(&rows));
    if let Some(path) = &args.report {
        let json: Vec<serde_json::Value> = rows
            .iter()
            .map(|(n, o)| serde_json::json!({"n_ahead": n, "report": o.report.to_json()}))
            .collect();
        write_json(path, &json)?;
    }
    Ok(())
}
