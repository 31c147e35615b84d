//! Subcommand implementations. Each writes its artifacts and a run manifest
//! into its output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use navrl_core::env::{Action, EnvConfig, NavEnv, TrackingMode};
use navrl_core::irl::{append_demonstration, load_demo_corpus, train_irl, BranchModels, DemoStep, Demonstration, IrlConfig};
use navrl_core::pilot::ScriptedPilot;
use navrl_core::rewards::RewardKind;
use navrl_core::sac::{evaluate, train, AgentController, AgentNetworks, EpisodeEval, EvalReport, SacConfig, EVAL_CSV_HEADER};
use navrl_core::stats::paired_t_test;
use navrl_core::{build_synthetic_tree, sample_targets, NavError, Result, Split, TargetBranch, TargetSet, Tree, TreeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cli::{
    EvaluateArgs, GenTreeArgs, RecordArgs, ReportArgs, SampleTargetsArgs, SynthDemosArgs, TrainIrlArgs, TrainSacArgs,
};
use crate::manifest::{output_dir, read_json, write_json, RunManifest};
use crate::server::{serve, AppState, ServerConfig};
use crate::session::SessionContext;

pub const TREE_FILE: &str = "tree.json";
pub const TARGETS_FILE: &str = "targets.json";
pub const CONFIG_FILE: &str = "config.json";
pub const EVAL_CSV: &str = "eval.csv";
pub const EVAL_JSONL: &str = "eval.jsonl";
pub const LOG_JSONL: &str = "log.jsonl";
pub const BEST_CHECKPOINT: &str = "checkpoints/best";
pub const FINAL_CHECKPOINT: &str = "checkpoints/final";

pub fn load_tree(path: &Path) -> Result<Arc<Tree>> {
    let text =
        fs::read_to_string(path).map_err(|e| NavError::Config(format!("tree: cannot read {}: {e}", path.display())))?;
    let tree = Tree::from_json(&text).map_err(|e| NavError::Config(format!("tree: {e}")))?;
    for b in TargetBranch::BOTH {
        if tree.find_label(b.label()).is_none() {
            return Err(NavError::Config(format!("tree: no {b} branch")));
        }
    }
    Ok(Arc::new(tree))
}

pub fn load_targets(path: &Path) -> Result<Vec<TargetSet>> {
    read_json(path, "targets")
}

pub fn gen_tree(args: &GenTreeArgs) -> Result<PathBuf> {
    let base: TreeConfig = match &args.config {
        Some(p) => read_json(p, "config")?,
        None => TreeConfig::default(),
    };
    let config = TreeConfig { seed: args.seed, layout: args.layout.into(), ..base };
    let tree: Tree = build_synthetic_tree(&config)?;
    let out = output_dir(args.out.as_deref(), "tree");
    fs::create_dir_all(&out)?;
    fs::write(out.join(TREE_FILE), tree.to_json()? + "\n")?;
    RunManifest::new("gen-tree", &config)?.seed("tree", config.seed).output(TREE_FILE).write(&out)?;
    Ok(out)
}

pub fn sample_targets_cmd(args: &SampleTargetsArgs) -> Result<PathBuf> {
    let tree = load_tree(&args.tree)?;
    let sets = TargetBranch::BOTH.iter().map(|b| sample_targets(&tree, *b, args.seed)).collect::<Result<Vec<_>>>()?;
    let out = output_dir(args.out.as_deref(), "targets");
    write_json(&out.join(TARGETS_FILE), &sets)?;
    RunManifest::new("sample-targets", args)?.seed("targets", args.seed).output(TARGETS_FILE).write(&out)?;
    Ok(out)
}

pub async fn record(args: &RecordArgs) -> Result<()> {
    let ctx = SessionContext::new(load_tree(&args.tree)?, load_targets(&args.targets)?);
    let corpus = output_dir(args.out.as_deref(), "demos");
    fs::create_dir_all(&corpus)?;
    RunManifest::new("record", args)?.output("rica.jsonl").output("lica.jsonl").write(&corpus)?;
    let config = ServerConfig { static_dir: args.static_dir.clone(), ..ServerConfig::new(corpus) };
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("session server on ws://{}/ws", listener.local_addr()?);
    serve(listener, AppState::new(ctx, config)).await
}

/// Scripted-pilot episodes on training targets, recorded like console sessions.
pub fn synth_demos(args: &SynthDemosArgs) -> Result<PathBuf> {
    if !(0.0..=1.0).contains(&args.noise) {
        return Err(NavError::Config("noise: must lie in [0, 1]".into()));
    }
    let ctx = SessionContext::new(load_tree(&args.tree)?, load_targets(&args.targets)?);
    let out = output_dir(args.out.as_deref(), "demos");
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut env = ctx.env()?;
    for branch in TargetBranch::BOTH {
        let pool: Vec<_> = env.target_pool().into_iter().filter(|(b, _)| *b == branch).map(|(_, t)| t).collect();
        if pool.is_empty() {
            return Err(NavError::Config(format!("targets: {branch} has no training targets")));
        }
        for i in 0..args.episodes {
            let seed = args.seed.wrapping_add(i as u64);
            env.reset(pool[i % pool.len()], seed)?;
            let pilot = ScriptedPilot::new(&env);
            let mut steps = Vec::new();
            loop {
                let action = if args.noise > 0.0 && rng.random_bool(args.noise) {
                    Action::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
                } else {
                    pilot.act(&env)
                }
                .clamped();
                let obs = env.dual_observation().to_vec();
                let (_, _, status) = env.step(action)?;
                steps.push(DemoStep { obs, action: action.to_array().to_vec() });
                if status.is_terminal() {
                    break;
                }
            }
            let outcome = env.status() == navrl_core::env::EpisodeStatus::Success;
            if outcome || !args.successes_only {
                let demo = Demonstration { branch, target: env.target(), steps, outcome, seed: Some(seed) };
                append_demonstration(&out, &demo)?;
            }
        }
    }
    RunManifest::new("synth-demos", args)?.seed("demos", args.seed).output("rica.jsonl").output("lica.jsonl").write(&out)?;
    Ok(out)
}

pub fn resolve_irl_config(args: &TrainIrlArgs) -> Result<IrlConfig> {
    let mut c: IrlConfig = match &args.config {
        Some(p) => read_json(p, "config")?,
        None => IrlConfig::default(),
    };
    if let Some(v) = args.iterations {
        c.iterations = v;
    }
    if let Some(v) = args.lr {
        c.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = args.grid_levels {
        c.grid_levels = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    c.validate()?;
    Ok(c)
}

pub fn train_irl_cmd(args: &TrainIrlArgs) -> Result<PathBuf> {
    let config = resolve_irl_config(args)?;
    let corpus = load_demo_corpus(&args.demos)?;
    let (models, logs) = train_irl(&corpus, &config)?;
    let out = output_dir(args.out.as_deref(), "irl");
    models.save(&out, config.iterations)?;
    write_json(&out.join(CONFIG_FILE), &config)?;
    write_json(&out.join("log.json"), &logs)?;
    #[derive(Serialize)]
    struct Recorded<'a> {
        demos: &'a Path,
        irl: &'a IrlConfig,
    }
    RunManifest::new("train-irl", Recorded { demos: &args.demos, irl: &config })?
        .seed("irl", config.seed)
        .output("rica")
        .output("lica")
        .output(CONFIG_FILE)
        .output("log.json")
        .write(&out)?;
    Ok(out)
}

/// SAC configuration from the optional file and flag overrides, with models attached.
pub fn resolve_sac_config(args: &TrainSacArgs) -> Result<SacConfig> {
    let mut c: SacConfig = match &args.config {
        Some(p) => read_json(p, "config")?,
        None => SacConfig::default(),
    };
    if let Some(r) = args.reward {
        c.reward.kind = r.into();
    }
    if let Some(a) = args.alpha {
        c.reward.alpha = a;
    }
    if let Some(t) = args.tracking {
        c.tracking_mode = t.into();
    }
    if let Some(v) = args.steps {
        c.total_steps = v;
    }
    if let Some(v) = args.eval_interval {
        c.eval_interval = v;
    }
    if let Some(v) = args.eval_episodes {
        c.eval_episodes = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if c.reward.kind.needs_models() {
        let dir = args
            .irl_models
            .as_ref()
            .ok_or_else(|| NavError::Config(format!("irl_models: required for the {} reward", c.reward.kind)))?;
        c.reward.models = Some(Arc::new(
            BranchModels::load(dir).map_err(|e| NavError::Config(format!("irl_models: {e}")))?,
        ));
    } else if args.irl_models.is_some() && c.reward.kind == RewardKind::Dense {
        return Err(NavError::Config("irl_models: not used by the dense reward".into()));
    }
    c.validate()?;
    Ok(c)
}

fn env_factory(
    tree: Arc<Tree>,
    targets: Vec<TargetSet>,
    tracking_mode: TrackingMode,
    targets_per_branch: Option<usize>,
) -> impl Fn(Split) -> Result<NavEnv> {
    move |split| {
        let config = EnvConfig { target_split: split, tracking_mode, targets_per_branch, ..EnvConfig::default() };
        NavEnv::new(tree.clone(), config, targets.clone())
    }
}

#[derive(Serialize, Deserialize)]
struct EpisodeLine {
    steps: u64,
    #[serde(flatten)]
    episode: EpisodeEval,
}

fn eval_files(reports: &[EvalReport]) -> Result<(String, String)> {
    let mut csv = format!("{EVAL_CSV_HEADER}\n");
    let mut jsonl = String::new();
    for r in reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
        for e in &r.episodes {
            jsonl.push_str(&serde_json::to_string(&EpisodeLine { steps: r.exploration_steps, episode: e.clone() })?);
            jsonl.push('\n');
        }
    }
    Ok((csv, jsonl))
}

pub fn train_sac_cmd(args: &TrainSacArgs) -> Result<PathBuf> {
    let config = resolve_sac_config(args)?;
    let tree = load_tree(&args.tree)?;
    let targets = load_targets(&args.targets)?;
    let factory = env_factory(tree, targets, config.tracking_mode, args.targets_per_branch);
    let outcome = train(&config, &factory, |r, l| {
        eprintln!(
            "steps {:>8}  success {:>5.1}%  path ratio {:>5.1}%  episodes {}  updates {}",
            r.exploration_steps, r.success_rate, r.path_ratio, l.episodes, l.updates
        );
    })?;
    let out = output_dir(args.out.as_deref(), "sac");
    fs::create_dir_all(&out)?;
    write_json(&out.join(CONFIG_FILE), &config)?;
    let (csv, jsonl) = eval_files(&outcome.reports)?;
    fs::write(out.join(EVAL_CSV), csv)?;
    fs::write(out.join(EVAL_JSONL), jsonl)?;
    let mut log = String::new();
    for l in &outcome.log {
        log.push_str(&serde_json::to_string(l)?);
        log.push('\n');
    }
    fs::write(out.join(LOG_JSONL), log)?;
    let last = outcome.reports.last().map_or(0, |r| r.exploration_steps);
    outcome.networks.save(&out.join(FINAL_CHECKPOINT), last)?;
    outcome.best.save(&out.join(BEST_CHECKPOINT), outcome.reports[outcome.best_index].exploration_steps)?;
    #[derive(Serialize)]
    struct Recorded<'a> {
        tree: &'a Path,
        targets: &'a Path,
        irl_models: Option<&'a PathBuf>,
        targets_per_branch: Option<usize>,
        sac: &'a SacConfig,
    }
    let recorded = Recorded {
        tree: &args.tree,
        targets: &args.targets,
        irl_models: args.irl_models.as_ref(),
        targets_per_branch: args.targets_per_branch,
        sac: &config,
    };
    RunManifest::new("train-sac", recorded)?
        .seed("sac", config.seed)
        .output(CONFIG_FILE)
        .output(EVAL_CSV)
        .output(EVAL_JSONL)
        .output(LOG_JSONL)
        .output(FINAL_CHECKPOINT)
        .output(BEST_CHECKPOINT)
        .write(&out)?;
    Ok(out)
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<EvalReport> {
    let checkpoint = args.checkpoint.as_ref().ok_or_else(|| NavError::Config("checkpoint: not given".into()))?;
    if !checkpoint.is_dir() {
        return Err(NavError::Config(format!("checkpoint: {} does not exist", checkpoint.display())));
    }
    let nets = AgentNetworks::load(checkpoint).map_err(|e| NavError::Config(format!("checkpoint: {e}")))?;
    let tracking = if nets.obs_dim() == TrackingMode::Dual.obs_dim() { TrackingMode::Dual } else { TrackingMode::Single };
    let factory = env_factory(load_tree(&args.tree)?, load_targets(&args.targets)?, tracking, args.targets_per_branch);
    let mut env = factory(Split::Test)?;
    let mut controller = AgentController::<ChaCha8Rng>::deterministic(&nets);
    let report = evaluate(&mut controller, &mut env, args.eval_episodes, 0, args.seed)?;
    let out = output_dir(args.out.as_deref(), "eval");
    fs::create_dir_all(&out)?;
    let (csv, jsonl) = eval_files(std::slice::from_ref(&report))?;
    fs::write(out.join(EVAL_CSV), csv)?;
    fs::write(out.join(EVAL_JSONL), jsonl)?;
    RunManifest::new("evaluate", args)?.seed("eval", args.seed).output(EVAL_CSV).output(EVAL_JSONL).write(&out)?;
    Ok(report)
}

/// One parsed eval.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub steps: u64,
    pub success_rate: f64,
    pub procedure_time_s: Option<f64>,
    pub path_ratio: f64,
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalRow>> {
    let text = fs::read_to_string(path).map_err(|e| NavError::Config(format!("runs: cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(EVAL_CSV_HEADER) {
        return Err(NavError::Parse { line: 1, message: format!("expected header {EVAL_CSV_HEADER:?}") });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |m: String| NavError::Parse { line: i + 2, message: m };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(format!("{} fields, expected 4", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        rows.push(EvalRow {
            steps: f[0].parse().map_err(|e| bad(format!("{:?}: {e}", f[0])))?,
            success_rate: num(f[1])?,
            procedure_time_s: if f[2].is_empty() { None } else { Some(num(f[2])?) },
            path_ratio: num(f[3])?,
        });
    }
    Ok(rows)
}

/// Index of the best row: highest success rate, then path ratio, then earliest.
pub fn best_row(rows: &[EvalRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let b = &rows[b];
                r.success_rate > b.success_rate || (r.success_rate == b.success_rate && r.path_ratio > b.path_ratio)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

fn covered_at(run: &Path, steps: u64) -> Result<Option<Vec<f64>>> {
    let path = run.join(EVAL_JSONL);
    let Ok(text) = fs::read_to_string(&path) else { return Ok(None) };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let e: EpisodeLine =
            serde_json::from_str(line).map_err(|e| NavError::Parse { line: i + 1, message: e.to_string() })?;
        if e.steps == steps {
            out.push(e.episode.covered_fraction);
        }
    }
    Ok(Some(out))
}

/// Writes `summary.csv` (best checkpoint per run), `series.csv` (success and
/// path ratio against exploration steps) and, for two or more runs,
/// `ttest.csv` pairing each run's best-checkpoint episodes with the first run's.
pub fn report(args: &ReportArgs) -> Result<PathBuf> {
    let out = output_dir(args.out.as_deref(), "report");
    fs::create_dir_all(&out)?;
    let mut summary = String::from("run,steps,success_rate,procedure_time_s,path_ratio\n");
    let mut series = String::from("run,steps,success_rate,path_ratio\n");
    let mut best_steps = Vec::new();
    for run in &args.runs {
        let rows = read_eval_csv(&run.join(EVAL_CSV))?;
        let name = run.display();
        let b = best_row(&rows).ok_or_else(|| NavError::Config(format!("runs: {name} has no evaluations")))?;
        let r = &rows[b];
        let time = r.procedure_time_s.map(|t| t.to_string()).unwrap_or_default();
        writeln!(summary, "{name},{},{},{time},{}", r.steps, r.success_rate, r.path_ratio).expect("string write");
        for r in &rows {
            writeln!(series, "{name},{},{},{}", r.steps, r.success_rate, r.path_ratio).expect("string write");
        }
        best_steps.push(r.steps);
    }
    fs::write(out.join("summary.csv"), summary)?;
    fs::write(out.join("series.csv"), series)?;
    let mut outputs = vec!["summary.csv", "series.csv"];
    if args.runs.len() >= 2 {
        let mut ttest = String::from("run_a,run_b,t,df,p,mean_difference\n");
        let base = covered_at(&args.runs[0], best_steps[0])?;
        for (run, steps) in args.runs.iter().zip(&best_steps).skip(1) {
            let (a, b) = (args.runs[0].display(), run.display());
            let line = match (&base, covered_at(run, *steps)?) {
                (Some(x), Some(y)) => match paired_t_test(x, &y) {
                    Ok(t) => format!("{a},{b},{},{},{},{}", t.t, t.df, t.p, t.mean_difference),
                    Err(e) => format!("{a},{b},,,,\"{e}\""),
                },
                _ => format!("{a},{b},,,,"),
            };
            ttest.push_str(&line);
            ttest.push('\n');
        }
        fs::write(out.join("ttest.csv"), ttest)?;
        outputs.push("ttest.csv");
    }
    let manifest = outputs.iter().fold(RunManifest::new("report", args)?, |m, o| m.output(o));
    manifest.write(&out)?;
    Ok(out)
}
