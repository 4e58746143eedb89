//! Run orchestration shared by the CLI and the acceptance suite.
//!
//! Evaluates judgment tasks (or samples rollout groups) concurrently up to
//! the worker count. Episodes never share mutable state: each one gets its
//! own memory, scratch directory, and (for mock runs) its own scripted
//! client, so mock runs produce byte-identical outputs for any worker
//! count. All outputs land under one run directory with a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agentloop::{
    render_system_prompt, run_episode, EpisodeConfig, EpisodeResult, EpisodeSetup, Termination,
};
use crate::bench::{
    build_prompt, count_tasks, counterbalanced_views, score, BenchTask, EvalResult, FailureClass,
    Report, TaskCounts, Track,
};
use crate::config::HarnessConfig;
use crate::datapipe::TrajectoryRecord;
use crate::docretrieval::{
    DocIndexTool, DocQueryTool, DocStore, DocStoreConfig, Embedder, HashEmbedder, LazyDocStore,
    RemoteEmbedder, VectorIndex,
};
use crate::ifcheck;
use crate::imagetool::{ImageToolConfig, ImageZoomTool};
use crate::memory::{ImageArtifact, MemoryMap};
use crate::mock::MockScript;
use crate::modelclient::{ChatClient, HttpChatClient, ScriptedClient};
use crate::reward::{
    grade_answer, group_advantages, reward_stage1_with_verdict, reward_stage2_with_verdict,
    GradeOutcome, RewardConstants,
};
use crate::toolkit::ToolRegistry;
use crate::trajectory::serialize;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("run setup failed: {0}")]
    Setup(String),
}

/// Where assistant turns come from.
pub enum ClientSource {
    Http(Arc<HttpChatClient>),
    Mock(Arc<MockScript>),
}

impl ClientSource {
    fn client_for(&self, task_id: &str, rollout: usize) -> Arc<dyn ChatClient> {
        match self {
            ClientSource::Http(client) => client.clone(),
            ClientSource::Mock(script) => {
                Arc::new(script.client_for(task_id, rollout)) as Arc<dyn ChatClient>
            }
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(self, ClientSource::Mock(_))
    }
}

/// Everything a run needs, assembled once.
pub struct Harness {
    pub reward: RewardConstants,
    pub episode: EpisodeConfig,
    pub image_cfg: ImageToolConfig,
    pub doc_store: Arc<LazyDocStore>,
    pub source: ClientSource,
    pub workers: usize,
    pub counterbalance: bool,
}

impl Harness {
    pub fn from_config(cfg: &HarnessConfig, source: ClientSource) -> Self {
        let embedder: Arc<dyn Embedder> = if cfg.embedding.url.is_empty() {
            Arc::new(HashEmbedder::new(cfg.embedding.dim, cfg.run.seed))
        } else {
            Arc::new(RemoteEmbedder::new(
                cfg.embedding.url.clone(),
                cfg.embedding.model.clone(),
                cfg.endpoint.api_key.clone(),
                cfg.embedding.dim,
            ))
        };
        let image_root = cfg.paths.image_root.clone();
        let index_path = cfg.paths.index.clone();
        let store_cfg = DocStoreConfig::new(image_root.clone());
        let doc_store = Arc::new(LazyDocStore::new(move || {
            let index = if index_path.as_os_str().is_empty() || !index_path.is_file() {
                match DocStore::build_from_image_root(embedder.as_ref(), &image_root) {
                    Ok(index) => {
                        if !index_path.as_os_str().is_empty() {
                            if let Err(e) = index.save(&index_path) {
                                log::warn!("could not persist index: {e}");
                            }
                        }
                        index
                    }
                    Err(e) => {
                        log::warn!("no document index available: {e}");
                        VectorIndex::new()
                    }
                }
            } else {
                match VectorIndex::load(&index_path) {
                    Ok(index) => index,
                    Err(e) => {
                        log::warn!("failed to load index: {e}");
                        VectorIndex::new()
                    }
                }
            };
            DocStore::new(index, embedder.clone(), store_cfg.clone())
        }));
        Harness {
            reward: cfg.reward.clone(),
            episode: cfg.episode.to_episode_config(),
            image_cfg: ImageToolConfig::default(),
            doc_store,
            source,
            workers: cfg.run.workers,
            counterbalance: cfg.run.counterbalance,
        }
    }

    /// Per-track toolkit: validators for IF, crop/zoom for FG, retrieval for
    /// Doc.
    pub fn registry_for_track(&self, track: Track) -> ToolRegistry {
        let mut registry = ToolRegistry::new();
        match track {
            Track::If => {
                ifcheck::register_all(&mut registry).expect("fresh registry");
            }
            Track::Fg => {
                registry
                    .register(Arc::new(ImageZoomTool::new(self.image_cfg.clone())))
                    .expect("fresh registry");
            }
            Track::Doc => {
                registry
                    .register(Arc::new(DocQueryTool::new(self.doc_store.clone())))
                    .expect("fresh registry");
                registry
                    .register(Arc::new(DocIndexTool::new(self.doc_store.clone())))
                    .expect("fresh registry");
            }
        }
        registry
    }

    /// All tool families in one registry (19 validators + 1 image + 2 doc).
    pub fn full_registry(&self) -> ToolRegistry {
        let mut registry = ToolRegistry::new();
        ifcheck::register_all(&mut registry).expect("fresh registry");
        registry
            .register(Arc::new(ImageZoomTool::new(self.image_cfg.clone())))
            .expect("fresh registry");
        registry
            .register(Arc::new(DocQueryTool::new(self.doc_store.clone())))
            .expect("fresh registry");
        registry
            .register(Arc::new(DocIndexTool::new(self.doc_store.clone())))
            .expect("fresh registry");
        registry
    }
}

fn sanitize_id(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

struct EpisodeOutcome {
    result: Option<EpisodeResult>,
    abort: Option<String>,
}

/// Seeds memory, renders prompts, and drives one episode for `task`.
fn drive_episode(
    harness: &Harness,
    registry: &ToolRegistry,
    task: &BenchTask,
    client: &dyn ChatClient,
    scratch_dir: &Path,
    memory: &mut MemoryMap,
) -> EpisodeOutcome {
    let prompt = match build_prompt(task) {
        Ok(p) => p,
        Err(e) => return EpisodeOutcome { result: None, abort: Some(e.to_string()) },
    };
    for (key, text) in &prompt.seed_texts {
        if memory.bind_text(key, text).is_err() {
            return EpisodeOutcome { result: None, abort: Some(format!("duplicate seed {key}")) };
        }
    }
    let mut image_keys = Vec::new();
    for (key, path) in &prompt.seed_images {
        let (w, h) = match image::image_dimensions(path) {
            Ok(dims) => dims,
            Err(e) => {
                return EpisodeOutcome {
                    result: None,
                    abort: Some(format!("cannot read task image {}: {e}", path.display())),
                }
            }
        };
        if memory.bind_image(key, ImageArtifact::new(path, w, h)).is_err() {
            return EpisodeOutcome { result: None, abort: Some(format!("duplicate seed {key}")) };
        }
        if key == "original_image" {
            image_keys.push(key.clone());
        }
    }
    let system_prompt = match render_system_prompt(task.track, task.doc_id(), registry) {
        Ok(p) => p,
        Err(e) => return EpisodeOutcome { result: None, abort: Some(e.to_string()) },
    };
    let setup = EpisodeSetup {
        system_prompt,
        user_text: prompt.user_text,
        user_image_keys: image_keys,
    };
    match run_episode(&setup, client, registry, memory, scratch_dir, &harness.episode) {
        Ok(result) => EpisodeOutcome { result: Some(result), abort: None },
        Err(e) => EpisodeOutcome { result: None, abort: Some(e.to_string()) },
    }
}

fn write_transcript(path: &Path, episode: &EpisodeResult) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    for record in &episode.transcript {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs tasks over a pool of `workers` threads, preserving input order in
/// the output.
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub counts: TaskCounts,
    pub outputs: BTreeMap<String, String>,
}

pub struct EvalRun {
    pub results: Vec<EvalResult>,
    pub report: Report,
    pub aborted: usize,
}

/// Evaluates every task and writes `results.jsonl`, `report.json`,
/// per-task transcripts, and the run manifest under `out_dir`.
pub fn run_eval(tasks: &[BenchTask], harness: &Harness, out_dir: &Path) -> Result<EvalRun, RunError> {
    fs::create_dir_all(out_dir.join("transcripts"))?;
    fs::create_dir_all(out_dir.join("artifacts"))?;
    let tasks: Vec<BenchTask> = if harness.counterbalance {
        tasks.iter().flat_map(|t| counterbalanced_views(t)).collect()
    } else {
        tasks.to_vec()
    };
    let registries: BTreeMap<Track, Arc<ToolRegistry>> = [Track::Fg, Track::Doc, Track::If]
        .into_iter()
        .map(|t| (t, Arc::new(harness.registry_for_track(t))))
        .collect();

    let results: Vec<EvalResult> = parallel_map(&tasks, harness.workers, |_, task| {
        let registry = &registries[&task.track];
        let safe_id = sanitize_id(&task.id);
        let scratch = out_dir.join("artifacts").join(&safe_id);
        if let Err(e) = fs::create_dir_all(&scratch) {
            return abort_result(task, format!("cannot create scratch dir: {e}"));
        }
        let client = harness.source.client_for(&task.id, 0);
        let mut memory = MemoryMap::new();
        let outcome =
            drive_episode(harness, registry, task, client.as_ref(), &scratch, &mut memory);
        let episode = match outcome.result {
            Some(episode) => episode,
            None => return abort_result(task, outcome.abort.unwrap_or_default()),
        };
        let transcript_rel = format!("transcripts/{safe_id}.jsonl");
        if let Err(e) = write_transcript(&out_dir.join(&transcript_rel), &episode) {
            log::warn!("could not write transcript for {}: {e}", task.id);
        }
        let manifest_path = scratch.join("memory.txt");
        if let Err(e) = fs::write(&manifest_path, memory.manifest(out_dir)) {
            log::warn!("could not write memory manifest for {}: {e}", task.id);
        }
        let grade = grade_answer(episode.trajectory.final_answer(), task, &harness.reward);
        let (correct, failure) = match grade.outcome {
            GradeOutcome::Correct => (true, None),
            GradeOutcome::Wrong => (false, Some(FailureClass::Wrong)),
            GradeOutcome::ParseFailure => (false, Some(FailureClass::Parse)),
        };
        EvalResult {
            task_id: task.id.clone(),
            track: task.track,
            mode: task.mode,
            verdict: grade.verdict,
            correct,
            failure,
            transcript: Some(transcript_rel),
        }
    });

    let report = score(&results);
    let aborted = results
        .iter()
        .filter(|r| r.failure == Some(FailureClass::EpisodeAbort))
        .count();
    write_jsonl(&out_dir.join("results.jsonl"), &results)?;
    fs::write(&out_dir.join("report.json"), serde_json::to_string_pretty(&report)? )?;
    let manifest = RunManifest {
        kind: "eval".to_string(),
        counts: count_tasks(&tasks),
        outputs: BTreeMap::from([
            ("results".to_string(), "results.jsonl".to_string()),
            ("report".to_string(), "report.json".to_string()),
            ("transcripts".to_string(), "transcripts/".to_string()),
        ]),
    };
    fs::write(&out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(EvalRun { results, report, aborted })
}

fn abort_result(task: &BenchTask, reason: String) -> EvalResult {
    log::warn!("episode for {} aborted: {reason}", task.id);
    EvalResult {
        task_id: task.id.clone(),
        track: task.track,
        mode: task.mode,
        verdict: None,
        correct: false,
        failure: Some(FailureClass::EpisodeAbort),
        transcript: None,
    }
}

/// One rollout's reward record, as consumed by an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub task_id: String,
    pub rollout: usize,
    pub stage: u8,
    pub components: BTreeMap<String, f64>,
    pub total: f64,
    pub advantage: f64,
    pub tool_calls: usize,
    pub succ_tool_calls: usize,
    pub correct: bool,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
}

pub struct RolloutRun {
    pub records: Vec<RolloutRecord>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub aborted: usize,
}

/// Samples `n` rollouts per task, scores them with the stage reward, and
/// normalizes advantages within each task's group.
pub fn run_rollout(
    tasks: &[BenchTask],
    harness: &Harness,
    n: usize,
    stage: u8,
    out_dir: &Path,
) -> Result<RolloutRun, RunError> {
    if n == 0 {
        return Err(RunError::Setup("rollout group size must be at least 1".into()));
    }
    if stage != 1 && stage != 2 {
        return Err(RunError::Setup("stage must be 1 or 2".into()));
    }
    fs::create_dir_all(out_dir.join("artifacts"))?;
    let registries: BTreeMap<Track, Arc<ToolRegistry>> = [Track::Fg, Track::Doc, Track::If]
        .into_iter()
        .map(|t| (t, Arc::new(harness.registry_for_track(t))))
        .collect();

    type TaskRollouts = Vec<(RolloutRecord, Option<TrajectoryRecord>)>;
    let grouped: Vec<TaskRollouts> = parallel_map(tasks, harness.workers, |_, task| {
        let registry = &registries[&task.track];
        let safe_id = sanitize_id(&task.id);
        let mut items = Vec::with_capacity(n);
        for rollout in 0..n {
            let scratch = out_dir.join("artifacts").join(format!("{safe_id}-r{rollout}"));
            if let Err(e) = fs::create_dir_all(&scratch) {
                items.push((rollout_abort(task, rollout, stage, e.to_string()), None));
                continue;
            }
            let client = harness.source.client_for(&task.id, rollout);
            let mut memory = MemoryMap::new();
            let outcome =
                drive_episode(harness, registry, task, client.as_ref(), &scratch, &mut memory);
            let episode = match outcome.result {
                Some(episode) => episode,
                None => {
                    items.push((
                        rollout_abort(task, rollout, stage, outcome.abort.unwrap_or_default()),
                        None,
                    ));
                    continue;
                }
            };
            let grade = grade_answer(episode.trajectory.final_answer(), task, &harness.reward);
            let breakdown = match stage {
                1 => reward_stage1_with_verdict(&episode.trajectory, &episode.format, &harness.reward),
                _ => reward_stage2_with_verdict(
                    &episode.trajectory,
                    &episode.format,
                    grade.value,
                    &harness.reward,
                ),
            };
            let record = RolloutRecord {
                task_id: task.id.clone(),
                rollout,
                stage,
                components: breakdown.components.clone(),
                total: breakdown.total,
                advantage: 0.0,
                tool_calls: breakdown.tool_calls,
                succ_tool_calls: breakdown.succ_tool_calls,
                correct: grade.outcome == GradeOutcome::Correct,
                termination: episode.termination,
                abort: None,
            };
            let trajectory = TrajectoryRecord {
                id: format!("{}-r{rollout}", task.id),
                format_valid: episode.format.valid(),
                answer_correct: grade.outcome == GradeOutcome::Correct,
                succ_tool_calls: episode.trajectory.succ_tool_calls(),
                trajectory: serialize(&episode.trajectory),
            };
            items.push((record, Some(trajectory)));
        }
        // Advantages normalize within this task's rollout group.
        let totals: Vec<f64> = items.iter().map(|(r, _)| r.total).collect();
        for (item, adv) in items.iter_mut().zip(group_advantages(&totals)) {
            item.0.advantage = adv;
        }
        items
    });

    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    for group in grouped {
        for (record, trajectory) in group {
            records.push(record);
            trajectories.extend(trajectory);
        }
    }
    let aborted = records.iter().filter(|r| r.abort.is_some()).count();
    write_jsonl(&out_dir.join("rollouts.jsonl"), &records)?;
    write_jsonl(&out_dir.join("trajectories.jsonl"), &trajectories)?;
    let manifest = RunManifest {
        kind: "rollout".to_string(),
        counts: count_tasks(tasks),
        outputs: BTreeMap::from([
            ("rollouts".to_string(), "rollouts.jsonl".to_string()),
            ("trajectories".to_string(), "trajectories.jsonl".to_string()),
        ]),
    };
    fs::write(&out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RolloutRun { records, trajectories, aborted })
}

/// Grades one episode per rollout and drops tasks the model solves every
/// time. Writes the kept tasks and the per-sample pass counts.
pub fn run_difficulty(
    tasks: Vec<BenchTask>,
    harness: &Harness,
    rollouts: usize,
    out_dir: &Path,
) -> Result<(Vec<BenchTask>, Vec<crate::datapipe::DifficultyRecord>), RunError> {
    fs::create_dir_all(out_dir.join("artifacts"))?;
    let registries: BTreeMap<Track, Arc<ToolRegistry>> = [Track::Fg, Track::Doc, Track::If]
        .into_iter()
        .map(|t| (t, Arc::new(harness.registry_for_track(t))))
        .collect();
    let (kept, records) = crate::datapipe::difficulty_filter(tasks, rollouts, |task, rollout| {
        let registry = &registries[&task.track];
        let scratch =
            out_dir.join("artifacts").join(format!("{}-d{rollout}", sanitize_id(&task.id)));
        fs::create_dir_all(&scratch).map_err(|e| e.to_string())?;
        let client = harness.source.client_for(&task.id, rollout);
        let mut memory = MemoryMap::new();
        let outcome =
            drive_episode(harness, registry, task, client.as_ref(), &scratch, &mut memory);
        let episode = outcome.result.ok_or_else(|| outcome.abort.unwrap_or_default())?;
        let grade = grade_answer(episode.trajectory.final_answer(), task, &harness.reward);
        Ok(grade.outcome == GradeOutcome::Correct)
    });
    let kept_lines: Vec<String> =
        kept.iter().map(|t| serde_json::to_string(t).expect("task serializes")).collect();
    fs::write(&out_dir.join("kept.jsonl"), kept_lines.join("\n") + "\n")?;
    write_jsonl(&out_dir.join("difficulty.jsonl"), &records)?;
    Ok((kept, records))
}

/// Generates one flawed response per seed and assembles preference pairs.
/// Seeds whose generation fails or degenerates are dropped and counted.
pub fn run_gen_pairs(
    seeds: &[crate::datapipe::PairSeed],
    harness: &Harness,
    out_path: &Path,
) -> Result<(Vec<crate::datapipe::PreferencePair>, usize), RunError> {
    use crate::datapipe::{generate_negative, PreferencePair};
    let params = harness.episode.params.clone();
    let outcomes: Vec<Option<PreferencePair>> =
        parallel_map(seeds, harness.workers, |_, seed| {
            let client = harness.source.client_for(&seed.id, 0);
            match generate_negative(seed, client.as_ref(), &params) {
                Ok(Some(negative)) => {
                    let pair = PreferencePair {
                        id: seed.id.clone(),
                        question: seed.question.clone(),
                        context: seed.context.clone(),
                        positive: seed.positive.clone(),
                        negative,
                        meta: BTreeMap::new(),
                    };
                    match pair.validate() {
                        Ok(()) => Some(pair),
                        Err(e) => {
                            log::warn!("dropping pair for {}: {e}", seed.id);
                            None
                        }
                    }
                }
                Ok(None) => {
                    log::warn!("dropping seed {}: generator kept echoing the positive", seed.id);
                    None
                }
                Err(e) => {
                    log::warn!("dropping seed {}: {e}", seed.id);
                    None
                }
            }
        });
    let pairs: Vec<PreferencePair> = outcomes.into_iter().flatten().collect();
    let dropped = seeds.len() - pairs.len();
    write_jsonl(out_path, &pairs)?;
    Ok((pairs, dropped))
}

fn rollout_abort(task: &BenchTask, rollout: usize, stage: u8, reason: String) -> RolloutRecord {
    log::warn!("rollout {rollout} for {} aborted: {reason}", task.id);
    RolloutRecord {
        task_id: task.id.clone(),
        rollout,
        stage,
        components: BTreeMap::new(),
        total: 0.0,
        advantage: 0.0,
        tool_calls: 0,
        succ_tool_calls: 0,
        correct: false,
        termination: Termination::FormatFailure,
        abort: Some(reason),
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Setup(e.to_string())
    }
}

/// A harness wired for scripted tests: hash embedder, mock client, default
/// constants.
pub fn mock_harness(script: MockScript, image_root: Option<PathBuf>) -> Harness {
    let mut cfg = HarnessConfig::default();
    if let Some(root) = image_root {
        cfg.paths.image_root = root;
    }
    Harness::from_config(&cfg, ClientSource::Mock(Arc::new(script)))
}

/// Direct scripted-client runs for pipeline stages that need a raw client.
pub fn scripted_client(turns: &[&str]) -> ScriptedClient {
    ScriptedClient::from_strs(turns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn if_task(id: &str) -> BenchTask {
        serde_json::from_value(json!({
            "schema": 1, "id": id, "track": "IF", "mode": "single_rm",
            "instruction": "Write 3 to 6 words.",
            "context": {"images": []},
            "candidates": ["one two three four five"],
            "constraint": {"check": "word_count_in_range", "text": "text_0", "min": 3, "max": 6},
            "gold": true
        }))
        .unwrap()
    }

    fn tool_then_answer() -> Vec<String> {
        vec![
            "<think>verify</think><tool_call>{\"name\":\"word_count_in_range\",\"arguments\":{\"text\":\"text_0\",\"min\":3,\"max\":6}}</tool_call>".into(),
            "<think>ok</think><answer>Overall Judgment: True</answer>".into(),
        ]
    }

    #[test]
    fn full_registry_has_22_tools() {
        let harness = mock_harness(MockScript::default(), None);
        assert_eq!(harness.full_registry().len(), 22);
        assert_eq!(harness.registry_for_track(Track::If).len(), 19);
        assert_eq!(harness.registry_for_track(Track::Fg).len(), 1);
        assert_eq!(harness.registry_for_track(Track::Doc).len(), 2);
    }

    #[test]
    fn eval_scores_a_correct_mock_run() {
        let dir = tempfile::tempdir().unwrap();
        let harness = mock_harness(MockScript::uniform(tool_then_answer()), None);
        let tasks = vec![if_task("t1"), if_task("t2")];
        let run = run_eval(&tasks, &harness, dir.path()).unwrap();
        assert_eq!(run.aborted, 0);
        assert!(run.results.iter().all(|r| r.correct));
        assert_eq!(run.report.per_track["IF"].accuracy, 1.0);
        assert!(dir.path().join("report.json").is_file());
        assert!(dir.path().join("results.jsonl").is_file());
        assert!(dir.path().join("transcripts/t1.jsonl").is_file());
        assert!(dir.path().join("manifest.json").is_file());
    }

    #[test]
    fn rollout_groups_normalize_advantages() {
        let dir = tempfile::tempdir().unwrap();
        let script: MockScript = serde_json::from_value(json!({
            "tasks": {
                "t1": [
                    ["<think>a</think><answer>Overall Judgment: True</answer>"],
                    ["<think>b</think><answer>Overall Judgment: False</answer>"],
                    tool_then_answer(),
                    ["no tags", "no tags", "no tags", "no tags"],
                ]
            }
        }))
        .unwrap();
        let harness = mock_harness(script, None);
        let run = run_rollout(&[if_task("t1")], &harness, 4, 2, dir.path()).unwrap();
        assert_eq!(run.records.len(), 4);
        let sum: f64 = run.records.iter().map(|r| r.advantage).sum();
        assert!(sum.abs() < 1e-9, "advantages sum to {sum}");
        // Tool-using correct rollout earns the top stage-2 reward.
        assert_eq!(run.records[2].total, 2.0);
        assert_eq!(run.records[1].total, 0.5); // wrong answer, no tools
        assert!(dir.path().join("rollouts.jsonl").is_file());
        assert_eq!(run.trajectories.len(), 4);
    }

    #[test]
    fn stage1_and_stage2_differ_on_identical_transcripts() {
        let tasks = vec![if_task("t1")];
        let script = MockScript::uniform(tool_then_answer());
        let d1 = tempfile::tempdir().unwrap();
        let one = run_rollout(&tasks, &mock_harness(script.clone(), None), 1, 1, d1.path()).unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let two = run_rollout(&tasks, &mock_harness(script, None), 1, 2, d2.path()).unwrap();
        assert_eq!(one.records[0].total, 0.7);
        assert_eq!(two.records[0].total, 2.0);
        assert_eq!(one.records[0].advantage, 0.0); // n = 1
    }

    #[test]
    fn episode_aborts_are_recorded_not_raised() {
        let dir = tempfile::tempdir().unwrap();
        // Empty script: the client exhausts immediately.
        let harness = mock_harness(MockScript::default(), None);
        let run = run_eval(&[if_task("t1")], &harness, dir.path()).unwrap();
        assert_eq!(run.aborted, 1);
        assert_eq!(run.results[0].failure, Some(FailureClass::EpisodeAbort));
        assert!(!run.results[0].correct);
    }

    #[test]
    fn mock_eval_is_deterministic_across_worker_counts() {
        let tasks: Vec<BenchTask> = (0..6).map(|i| if_task(&format!("t{i}"))).collect();
        let script = MockScript::uniform(tool_then_answer());
        let mut outputs = Vec::new();
        for workers in [1usize, 4] {
            let dir = tempfile::tempdir().unwrap();
            let mut harness = mock_harness(script.clone(), None);
            harness.workers = workers;
            run_eval(&tasks, &harness, dir.path()).unwrap();
            outputs.push((
                fs::read(dir.path().join("report.json")).unwrap(),
                fs::read(dir.path().join("results.jsonl")).unwrap(),
                fs::read(dir.path().join("transcripts/t3.jsonl")).unwrap(),
            ));
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}
