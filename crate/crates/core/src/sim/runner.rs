//! Closed-loop episode runner: render, extract, infer, weigh, act, score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::control::{controller_action, ControllerKind, Variant};
use super::metrics::{compute_outcome, EpisodeOutcome, EpisodeResult, StepSample};
use super::render::render_semantic_map;
use super::{
    crosswalk_occupied, crosswalk_pedestrian_gap, init_episode, nearest_road_pedestrian_gap, step,
    ttc, EpisodeState, Occluder, PedKind, Pedestrian, Phase, ScenarioConfig, SimError,
};
use crate::predicates::{extract_facts, CameraModel, Fact};
use crate::reward::{final_reward, g_eff, g_saf, g_smooth, reward_weight, RewardParams};
use crate::sfol::{infer, parse_rules, rule_confidences, GroundHead, Rule, RuleTag};

/// One trajectory-log entry. Facts and heads are the perception/inference
/// snapshot the action was chosen from; `v`, `a` and the distances describe
/// the state after the step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub v: f64,
    pub a: f64,
    pub d_ped: Option<f64>,
    pub d_cross: f64,
    pub facts: Vec<Fact>,
    pub heads: Vec<GroundHead>,
    pub w_saf: f64,
    pub w_eff: f64,
    pub r: f64,
}

impl StepRecord {
    pub fn to_json_lines(records: &[StepRecord]) -> String {
        records
            .iter()
            .map(|r| serde_json::to_string(r).expect("step record serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn tag_entries(
    confidences: &std::collections::BTreeMap<RuleTag, Vec<crate::sfol::RuleConfidence>>,
    tag: RuleTag,
) -> Vec<(f64, f64)> {
    confidences
        .get(&tag)
        .map(|list| list.iter().map(|c| (c.confidence, c.importance)).collect())
        .unwrap_or_default()
}

fn weight_or_zero(entries: &[(f64, f64)]) -> f64 {
    if entries.is_empty() {
        0.0
    } else {
        reward_weight(entries).expect("non-empty confidence list")
    }
}

/// Runs one episode from a prepared state. Returns the full trajectory log
/// and the outcome record.
pub fn run_episode_from_state(
    mut state: EpisodeState,
    controller: ControllerKind,
    rules: &[Rule],
    cfg: &ScenarioConfig,
) -> (Vec<StepRecord>, EpisodeOutcome) {
    let cam = CameraModel {
        focal_length_px: cfg.focal_px,
        ..CameraModel::default()
    };
    let params = RewardParams {
        dt: cfg.dt,
        ..RewardParams::default()
    };
    let max_steps = (cfg.timeout_s / cfg.dt).round() as usize;

    let mut records = Vec::new();
    let mut samples = Vec::new();
    let mut stopping_distance = 0.0f64;
    let mut sd_recorded = false;
    let mut impact_speed = 0.0f64;
    let mut result = EpisodeResult::Timeout;

    for _ in 0..max_steps {
        let map = render_semantic_map(&state, &cam, cfg);
        let facts = extract_facts(&map, &cam).expect("rendered map extracts cleanly");
        let (heads, _) = infer(rules, &facts);
        let confidences = rule_confidences(&heads, rules);
        let eff_entries = tag_entries(&confidences, RuleTag::Efficiency);
        let saf_entries = tag_entries(&confidences, RuleTag::Safety);
        let w_eff = weight_or_zero(&eff_entries);
        let w_saf = weight_or_zero(&saf_entries);
        let max_safety_tau = saf_entries
            .iter()
            .map(|(tau, _)| *tau)
            .fold(0.0f64, f64::max);

        let action = controller_action(controller, w_saf, w_eff, state.ego_v, cfg);
        let prev_v = state.ego_v;
        state = step(&state, action, cfg);
        let accel = (state.ego_v - prev_v) / cfg.dt;

        let d_ped = nearest_road_pedestrian_gap(&state, cfg);
        let d_cross = cfg.crosswalk_pos - state.ego_x;
        let step_ttc = ttc(&state, cfg);

        // Logged reward weights follow the controller (the fixed baseline
        // scores its own constant weighting).
        let (rw_saf, rw_eff) = controller.effective_weights(w_saf, w_eff);
        let saf_term = g_saf(
            state.ego_v,
            d_ped.unwrap_or(f64::INFINITY),
            state.collided,
            &params,
        )
        .expect("state speeds and gaps are nonnegative");
        let eff_term = g_eff(state.ego_v, &params).expect("speed is nonnegative");
        let smooth_term = g_smooth(accel, &params);
        let r = final_reward(saf_term, eff_term, smooth_term, rw_saf, rw_eff);

        samples.push(StepSample {
            v: state.ego_v,
            accel,
            ttc: step_ttc,
            max_safety_tau,
        });
        records.push(StepRecord {
            t: state.t,
            v: state.ego_v,
            a: accel,
            d_ped,
            d_cross,
            facts,
            heads,
            w_saf: rw_saf,
            w_eff: rw_eff,
            r,
        });

        if !sd_recorded
            && state.has_moved
            && state.ego_v < ScenarioConfig::STOP_EPS
            && crosswalk_occupied(&state, cfg)
        {
            stopping_distance = crosswalk_pedestrian_gap(&state, cfg).unwrap_or(0.0);
            sd_recorded = true;
        }

        if state.collided {
            impact_speed = state.ego_v;
            result = EpisodeResult::Collision;
            break;
        }
        if state.ego_x >= cfg.goal_pos {
            result = EpisodeResult::Success;
            break;
        }
    }

    let outcome = compute_outcome(
        result,
        &samples,
        stopping_distance,
        impact_speed,
        state.t,
        cfg.timeout_s,
        cfg.dt,
    );
    (records, outcome)
}

/// Initializes from the config seed and runs one episode with the variant's
/// rule subset.
pub fn run_episode(
    controller: ControllerKind,
    variant: Variant,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<(Vec<StepRecord>, EpisodeOutcome), SimError> {
    let rules = variant.filter_rules(
        parse_rules(crate::sfol::DEFAULT_RULES).expect("bundled rules parse"),
    );
    let state = init_episode(cfg, seed)?;
    Ok(run_episode_from_state(state, controller, &rules, cfg))
}

/// A deterministic single-pedestrian crossing: the staged pedestrian enters
/// the crosswalk as the ego approaches and clears it after crossing. Used for
/// trace-shape checks.
pub fn scripted_crossing_state(cfg: &ScenarioConfig, seed: u64) -> EpisodeState {
    let ped = Pedestrian {
        id: 0,
        x: cfg.crosswalk_pos + 1.75,
        y: 1.8,
        speed: cfg.walk_speed,
        kind: PedKind::Sudden {
            trigger_gap: 14.0,
            stage_y: 1.8,
            approach: false,
            latest_t: f64::INFINITY,
        },
        phase: Phase::Waiting,
    };
    EpisodeState::synthetic(0.0, 0.0, vec![ped], Occluder::for_level(cfg.occlusion, cfg), seed)
}

/// One row of the evaluation matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub density: String,
    pub occlusion: String,
    pub success_pct: f64,
    pub collision_pct: f64,
    pub timeout_pct: f64,
    pub mean_stopping_distance: f64,
    pub rms_speed: f64,
    pub rms_accel: f64,
    pub rms_jerk: f64,
    /// Per-episode minimum TTC, capped at the timeout horizon, averaged.
    pub min_ttc: f64,
    /// Mean ego speed at impact over collision episodes (0 when none).
    pub impact_speed: f64,
    pub near_miss_rate: f64,
    pub false_brake_rate: f64,
    pub ttg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalTable {
    pub controller: String,
    pub variant: String,
    pub episodes: usize,
    pub master_seed: u64,
    pub rows: Vec<EvalRow>,
}

/// The eight driving-characteristic metrics of a row, in report order.
const METRIC_NAMES: [&str; 8] = [
    "rms_speed",
    "rms_accel",
    "rms_jerk",
    "min_ttc",
    "impact_speed",
    "near_miss_rate",
    "false_brake_rate",
    "ttg",
];
/// Metrics inverted after normalization so higher is always better.
const INVERTED: [bool; 8] = [false, true, true, false, true, true, true, true];

impl EvalRow {
    fn metric(&self, i: usize) -> f64 {
        match i {
            0 => self.rms_speed,
            1 => self.rms_accel,
            2 => self.rms_jerk,
            3 => self.min_ttc,
            4 => self.impact_speed,
            5 => self.near_miss_rate,
            6 => self.false_brake_rate,
            _ => self.ttg,
        }
    }
}

fn mix_seed(master: u64, cell: usize, episode: usize) -> u64 {
    // splitmix64 over a combined index.
    let mut z = master
        .wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(1 + cell as u64))
        .wrapping_add(0x517CC1B727220A95u64.wrapping_mul(1 + episode as u64));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Runs `episodes` per `(density, occlusion)` cell, fanning episodes across
/// the rayon pool. Results are keyed and sorted by `(cell, episode)` before
/// aggregation, so the table is identical for any worker count.
pub fn evaluate(
    controller: ControllerKind,
    variant: Variant,
    cells: &[(super::Density, super::OcclusionLevel)],
    episodes: usize,
    master_seed: u64,
    base_cfg: &ScenarioConfig,
) -> Result<EvalTable, SimError> {
    let rules = variant.filter_rules(
        parse_rules(crate::sfol::DEFAULT_RULES).expect("bundled rules parse"),
    );
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for cell in 0..cells.len() {
        for ep in 0..episodes {
            jobs.push((cell, ep));
        }
    }
    // Validate configs up front so worker threads cannot fail.
    let mut cfgs = Vec::new();
    for &(density, occlusion) in cells {
        let cfg = ScenarioConfig {
            density,
            occlusion,
            ..base_cfg.clone()
        };
        cfg.validate()?;
        cfgs.push(cfg);
    }

    let mut results: Vec<((usize, usize), EpisodeOutcome)> = jobs
        .par_iter()
        .map(|&(cell, ep)| {
            let cfg = &cfgs[cell];
            let seed = mix_seed(master_seed, cell, ep);
            let state = init_episode(cfg, seed).expect("validated config");
            let (_, outcome) = run_episode_from_state(state, controller, &rules, cfg);
            ((cell, ep), outcome)
        })
        .collect();
    results.sort_by_key(|(key, _)| *key);

    let mut rows = Vec::new();
    for (cell, &(density, occlusion)) in cells.iter().enumerate() {
        let outcomes: Vec<&EpisodeOutcome> = results
            .iter()
            .filter(|((c, _), _)| *c == cell)
            .map(|(_, o)| o)
            .collect();
        let n = outcomes.len() as f64;
        let count = |r: EpisodeResult| {
            outcomes.iter().filter(|o| o.result == r).count() as f64
        };
        let mean = |f: &dyn Fn(&EpisodeOutcome) -> f64| {
            outcomes.iter().map(|o| f(o)).sum::<f64>() / n
        };
        let collisions: Vec<&&EpisodeOutcome> = outcomes
            .iter()
            .filter(|o| o.result == EpisodeResult::Collision)
            .collect();
        let impact = if collisions.is_empty() {
            0.0
        } else {
            collisions.iter().map(|o| o.impact_speed).sum::<f64>() / collisions.len() as f64
        };
        let timeout = base_cfg.timeout_s;
        rows.push(EvalRow {
            density: density.as_str().to_string(),
            occlusion: occlusion.as_str().to_string(),
            success_pct: 100.0 * count(EpisodeResult::Success) / n,
            collision_pct: 100.0 * count(EpisodeResult::Collision) / n,
            timeout_pct: 100.0 * count(EpisodeResult::Timeout) / n,
            mean_stopping_distance: mean(&|o| o.stopping_distance),
            rms_speed: mean(&|o| o.rms_speed),
            rms_accel: mean(&|o| o.rms_accel),
            rms_jerk: mean(&|o| o.rms_jerk),
            min_ttc: mean(&|o| o.min_ttc.min(timeout)),
            impact_speed: impact,
            near_miss_rate: mean(&|o| if o.near_miss { 1.0 } else { 0.0 }),
            false_brake_rate: mean(&|o| o.false_brake_rate),
            ttg: mean(&|o| o.ttg),
        });
    }

    Ok(EvalTable {
        controller: controller.as_str().to_string(),
        variant: variant.as_str().to_string(),
        episodes,
        master_seed,
        rows,
    })
}

impl EvalTable {
    /// CSV with the collision-test layout: result percentages, stopping
    /// distance, the eight raw metrics, then their normalized and (where
    /// marked) inverted forms. Normalization is min-max across the table's
    /// rows; a degenerate range normalizes to 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("density,occlusion,success_pct,collision_pct,timeout_pct,stopping_distance_m");
        for name in METRIC_NAMES {
            out.push(',');
            out.push_str(name);
        }
        for name in METRIC_NAMES {
            out.push_str(&format!(",{name}_norm"));
        }
        out.push('\n');

        let mut ranges = Vec::new();
        for i in 0..METRIC_NAMES.len() {
            let lo = self.rows.iter().map(|r| r.metric(i)).fold(f64::INFINITY, f64::min);
            let hi = self
                .rows
                .iter()
                .map(|r| r.metric(i))
                .fold(f64::NEG_INFINITY, f64::max);
            ranges.push((lo, hi));
        }

        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.1},{:.1},{:.1},{:.4}",
                row.density,
                row.occlusion,
                row.success_pct,
                row.collision_pct,
                row.timeout_pct,
                row.mean_stopping_distance
            ));
            for i in 0..METRIC_NAMES.len() {
                out.push_str(&format!(",{:.6}", row.metric(i)));
            }
            for i in 0..METRIC_NAMES.len() {
                let (lo, hi) = ranges[i];
                let norm = if hi > lo { (row.metric(i) - lo) / (hi - lo) } else { 1.0 };
                let value = if INVERTED[i] { 1.0 - norm } else { norm };
                out.push_str(&format!(",{value:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}
