//! Two-stage rollout rewards and group-relative advantages.
//!
//! Stage 1 encourages tool exploration: `R_tool = R_f + R_try * 1[tool_calls > 0]`.
//! Stage 2 refines for accuracy, hierarchically:
//!
//! - answer wrong, tools tried:      `R_f + R_try`
//! - answer right, no successful tool: `R_f + R_a`
//! - answer right, successful tool:    `R_f + R_a + R_succ`
//! - answer wrong, no tools at all:    `R_f`
//!
//! `R_f` is binary: the format constant when the trajectory validates, zero
//! otherwise. Advantages normalize rewards within a rollout group by the
//! group mean and population standard deviation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::{parse_judgment, BenchTask, Verdict};
use crate::trajectory::{validate_format, FormatVerdict, Trajectory};

/// Reward magnitudes are configuration, not paper constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConstants {
    pub r_f: f64,
    pub r_try: f64,
    pub r_a: f64,
    pub r_succ: f64,
}

impl Default for RewardConstants {
    fn default() -> Self {
        RewardConstants { r_f: 0.5, r_try: 0.2, r_a: 1.0, r_succ: 0.5 }
    }
}

impl RewardConstants {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in
            [("r_f", self.r_f), ("r_try", self.r_try), ("r_a", self.r_a), ("r_succ", self.r_succ)]
        {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("reward constant {name} must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Per-trajectory reward components and total for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub stage: u8,
    pub components: BTreeMap<String, f64>,
    pub total: f64,
    pub tool_calls: usize,
    pub succ_tool_calls: usize,
}

impl RewardBreakdown {
    fn from_components(
        stage: u8,
        components: BTreeMap<String, f64>,
        tool_calls: usize,
        succ_tool_calls: usize,
    ) -> Self {
        let total = components.values().sum();
        RewardBreakdown { stage, components, total, tool_calls, succ_tool_calls }
    }
}

/// Tool calls whose dispatch returned a non-error response. An approximation
/// of "the call contributed": causality is not computable without
/// counterfactual rollouts.
pub fn count_succ_tool_calls(traj: &Trajectory) -> usize {
    traj.succ_tool_calls()
}

fn format_reward(valid: bool, constants: &RewardConstants) -> f64 {
    if valid {
        constants.r_f
    } else {
        0.0
    }
}

/// Stage-1 reward with the format verdict computed from the trajectory.
pub fn reward_stage1(traj: &Trajectory, constants: &RewardConstants) -> RewardBreakdown {
    reward_stage1_with_verdict(traj, &validate_format(traj), constants)
}

/// Stage-1 reward under a caller-supplied verdict (the episode driver merges
/// turn-level violations the bare trajectory cannot show).
pub fn reward_stage1_with_verdict(
    traj: &Trajectory,
    verdict: &FormatVerdict,
    constants: &RewardConstants,
) -> RewardBreakdown {
    let tool_calls = traj.tool_calls();
    let mut components = BTreeMap::new();
    components.insert("R_f".to_string(), format_reward(verdict.valid(), constants));
    components
        .insert("R_try".to_string(), if tool_calls > 0 { constants.r_try } else { 0.0 });
    RewardBreakdown::from_components(1, components, tool_calls, traj.succ_tool_calls())
}

/// Stage-2 hierarchical reward. `r_a_value` comes from [`grade_answer`] and
/// is either zero or the `r_a` constant.
pub fn reward_stage2(
    traj: &Trajectory,
    r_a_value: f64,
    constants: &RewardConstants,
) -> RewardBreakdown {
    reward_stage2_with_verdict(traj, &validate_format(traj), r_a_value, constants)
}

pub fn reward_stage2_with_verdict(
    traj: &Trajectory,
    verdict: &FormatVerdict,
    r_a_value: f64,
    constants: &RewardConstants,
) -> RewardBreakdown {
    let tool_calls = traj.tool_calls();
    let succ = traj.succ_tool_calls();
    let mut components = BTreeMap::new();
    components.insert("R_f".to_string(), format_reward(verdict.valid(), constants));
    if r_a_value <= 0.0 {
        if tool_calls > 0 {
            components.insert("R_try".to_string(), constants.r_try);
        }
        // Wrong answer without any tool attempt earns the format term only.
    } else {
        components.insert("R_a".to_string(), r_a_value);
        if succ > 0 {
            components.insert("R_succ".to_string(), constants.r_succ);
        }
    }
    RewardBreakdown::from_components(2, components, tool_calls, succ)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeOutcome {
    Correct,
    Wrong,
    ParseFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grade {
    pub value: f64,
    pub outcome: GradeOutcome,
    pub verdict: Option<Verdict>,
}

/// Grades a final answer against the task gold: exact verdict match earns
/// `r_a`, anything else (including an unparseable answer) earns zero.
pub fn grade_answer(
    answer: Option<&str>,
    task: &BenchTask,
    constants: &RewardConstants,
) -> Grade {
    let Some(answer) = answer else {
        return Grade { value: 0.0, outcome: GradeOutcome::ParseFailure, verdict: None };
    };
    match parse_judgment(answer, task.mode) {
        Ok(verdict) => {
            if task.gold.matches(&verdict) {
                Grade { value: constants.r_a, outcome: GradeOutcome::Correct, verdict: Some(verdict) }
            } else {
                Grade { value: 0.0, outcome: GradeOutcome::Wrong, verdict: Some(verdict) }
            }
        }
        Err(_) => Grade { value: 0.0, outcome: GradeOutcome::ParseFailure, verdict: None },
    }
}

pub const ADVANTAGE_EPSILON: f64 = 1e-8;

/// Group-relative normalization: `a_i = (r_i - mean) / max(std, eps)` with
/// the population standard deviation. Degenerate groups (n = 1 or all equal
/// rewards) yield all-zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Vec<f64> {
    let n = rewards.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(ADVANTAGE_EPSILON);
    rewards.iter().map(|r| (r - mean) / std).collect()
}

/// One rollout group: the n trajectories sampled for a single query.
#[derive(Debug, Clone)]
pub struct RolloutGroup {
    pub items: Vec<RolloutItem>,
}

#[derive(Debug, Clone)]
pub struct RolloutItem {
    pub trajectory: Trajectory,
    pub answer: Option<String>,
    pub breakdown: RewardBreakdown,
}

impl RolloutGroup {
    pub fn size(&self) -> usize {
        self.items.len()
    }

    pub fn advantages(&self) -> Vec<f64> {
        let rewards: Vec<f64> = self.items.iter().map(|i| i.breakdown.total).collect();
        group_advantages(&rewards)
    }
}
