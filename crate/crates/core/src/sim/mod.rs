//! Deterministic longitudinal simulator of the occluded pedestrian crossing.
//!
//! World frame: the road runs along +x from 0 to `road_length`; lateral y is
//! positive to the right of the road centerline. The ego drives the left lane
//! at fixed `ego_lane_y` with one throttle/brake action per step. A parked
//! vehicle sits just before the crosswalk and hides staged pedestrians until
//! they cross. All randomness is drawn at initialization from seeded streams;
//! stepping is a pure function of state, so identical `(config, seed,
//! controller)` runs are bit-identical.

mod control;
mod metrics;
mod render;
mod runner;

pub use control::{controller_action, sfol_action, ControllerKind, Variant, CONTROL_GAIN};
pub use metrics::{EpisodeOutcome, EpisodeResult};
pub use render::render_semantic_map;
pub use runner::{
    evaluate, run_episode, run_episode_from_state, scripted_crossing_state, EvalRow, EvalTable,
    StepRecord,
};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("scenario config invalid: {0}")]
    InvalidConfig(String),
}

/// Pedestrian traffic density presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Low,
    Med,
    High,
}

impl Density {
    /// `(pedestrians, running fraction, unexpected-crossing fraction)`.
    pub fn profile(&self) -> (usize, f64, f64) {
        match self {
            Density::Low => (10, 0.0, 0.0),
            Density::Med => (25, 0.2, 0.2),
            Density::High => (50, 0.4, 0.4),
        }
    }

    pub fn parse(s: &str) -> Option<Density> {
        match s {
            "low" => Some(Density::Low),
            "med" => Some(Density::Med),
            "high" => Some(Density::High),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Density::Low => "low",
            Density::Med => "med",
            Density::High => "high",
        }
    }
}

/// Size of the parked vehicle occluding the crosswalk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionLevel {
    /// A car: pedestrians' heads stay visible above it.
    Partial,
    /// A tall van: staged pedestrians are fully hidden.
    Full,
}

impl OcclusionLevel {
    pub fn parse(s: &str) -> Option<OcclusionLevel> {
        match s {
            "partial" => Some(OcclusionLevel::Partial),
            "full" => Some(OcclusionLevel::Full),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OcclusionLevel::Partial => "partial",
            OcclusionLevel::Full => "full",
        }
    }
}

/// How the staged crossing pedestrians behave before triggering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PedBehavior {
    /// Walks in from the sidewalk (briefly visible), waits occluded, crosses.
    BrieflyVisibleThenOccluded,
    /// Waits fully occluded, then crosses without warning.
    FullyOccludedSudden,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub road_length: f64,
    /// Near edge of the crosswalk along the road.
    pub crosswalk_pos: f64,
    /// Along-road depth of the crosswalk zone.
    pub crosswalk_depth: f64,
    /// Lateral half-width of the painted crosswalk (the pinhole reference
    /// object's half-width).
    pub crosswalk_half_width: f64,
    pub road_half_width: f64,
    pub sidewalk_outer: f64,
    pub goal_pos: f64,
    pub density: Density,
    pub occlusion: OcclusionLevel,
    pub behavior: PedBehavior,
    pub timeout_s: f64,
    pub dt: f64,
    pub a_max: f64,
    pub v_max: f64,
    pub walk_speed: f64,
    /// 6 km/h.
    pub run_speed: f64,
    /// Ground-surface sensing range in meters.
    pub render_range: f64,
    /// Vehicles beyond this range are not segmented. Kept at the distance
    /// where the ground row grid first resolves the crosswalk, so the parked
    /// occluder cannot suppress the open-road rule before the crosswalk
    /// rules can take over.
    pub vehicle_detection_range: f64,
    /// Pedestrians resolve later than large structures; beyond this range
    /// they are not segmented.
    pub ped_detection_range: f64,
    pub camera_height: f64,
    /// Focal length of the dashboard camera in pixels. The default trades
    /// field of view against range on the 224-px map: wide enough to keep the
    /// near field in frame, long enough that the crosswalk stays resolvable
    /// through the approach.
    pub focal_px: f64,
    /// Ego lane center (left lane).
    pub ego_lane_y: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            road_length: 110.0,
            crosswalk_pos: 75.0,
            crosswalk_depth: 8.0,
            crosswalk_half_width: 1.75,
            road_half_width: 3.5,
            sidewalk_outer: 6.5,
            goal_pos: 110.0,
            density: Density::Low,
            occlusion: OcclusionLevel::Full,
            behavior: PedBehavior::FullyOccludedSudden,
            timeout_s: 60.0,
            dt: 0.1,
            a_max: 4.0,
            v_max: 14.0,
            walk_speed: 1.4,
            run_speed: 6.0 / 3.6,
            render_range: 58.0,
            vehicle_detection_range: 54.0,
            ped_detection_range: 26.0,
            camera_height: 1.5,
            focal_px: 224.0,
            ego_lane_y: -1.75,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.crosswalk_pos > 0.0 && self.crosswalk_pos + self.crosswalk_depth < self.goal_pos)
        {
            return Err(SimError::InvalidConfig(
                "crosswalk must lie strictly between start and goal".into(),
            ));
        }
        if self.dt <= 0.0 || self.timeout_s <= 0.0 || self.a_max <= 0.0 || self.v_max <= 0.0 {
            return Err(SimError::InvalidConfig(
                "dt, timeout, a_max and v_max must be positive".into(),
            ));
        }
        if self.goal_pos > self.road_length {
            return Err(SimError::InvalidConfig("goal beyond road end".into()));
        }
        Ok(())
    }

    /// Ego collision half-extents: half-length along x, half-width along y.
    pub const EGO_HALF_LEN: f64 = 1.9;
    pub const EGO_HALF_WIDTH: f64 = 1.0;
    /// Pedestrian body half-extents.
    pub const PED_HALF_LEN: f64 = 0.25;
    pub const PED_HALF_WIDTH: f64 = 0.25;
    pub const PED_HEIGHT: f64 = 1.8;
    /// Speed below which the ego counts as fully stopped.
    pub const STOP_EPS: f64 = 0.01;
}

/// The parked vehicle hiding the crosswalk approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    /// Rear face (nearest to the ego's start).
    pub rear_x: f64,
    pub length: f64,
    /// Lateral extent, left and right edges.
    pub y_left: f64,
    pub y_right: f64,
    pub height: f64,
}

impl Occluder {
    pub fn for_level(level: OcclusionLevel, cfg: &ScenarioConfig) -> Self {
        let rear_x = cfg.crosswalk_pos - 2.0;
        match level {
            OcclusionLevel::Partial => Occluder {
                rear_x,
                length: 4.5,
                y_left: 0.85,
                y_right: 2.65,
                height: 1.5,
            },
            OcclusionLevel::Full => Occluder {
                rear_x,
                length: 6.0,
                y_left: 0.5,
                y_right: 3.0,
                height: 2.5,
            },
        }
    }

    pub fn front_x(&self) -> f64 {
        self.rear_x + self.length
    }

    pub fn center_x(&self) -> f64 {
        self.rear_x + 0.5 * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Waiting,
    Crossing,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PedKind {
    /// Ambles along a sidewalk, bouncing at the road ends.
    Walker { dir: f64 },
    /// Crosses at the crosswalk on its own schedule, ego-independent.
    Orderly { start_t: f64, from_sign: f64 },
    /// Staged near the occluder; crosses when the ego gap drops below the
    /// trigger, or at `latest_t` if the ego never comes. `approach=true`
    /// walks in from the sidewalk first.
    Sudden {
        trigger_gap: f64,
        stage_y: f64,
        approach: bool,
        latest_t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub kind: PedKind,
    pub phase: Phase,
}

impl Pedestrian {
    pub fn on_road(&self, cfg: &ScenarioConfig) -> bool {
        self.y.abs() < cfg.road_half_width
    }

    pub fn on_crosswalk(&self, cfg: &ScenarioConfig) -> bool {
        self.on_road(cfg)
            && self.x >= cfg.crosswalk_pos
            && self.x < cfg.crosswalk_pos + cfg.crosswalk_depth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub t: f64,
    pub ego_x: f64,
    pub ego_v: f64,
    pub last_action: f64,
    pub collided: bool,
    pub has_moved: bool,
    /// Out-of-range actions are clamped; each occurrence is counted here.
    pub clamp_warnings: u32,
    pub peds: Vec<Pedestrian>,
    pub occluder: Occluder,
    pub seed: u64,
}

impl EpisodeState {
    /// Bare state for synthetic and scripted setups.
    pub fn synthetic(
        ego_x: f64,
        ego_v: f64,
        peds: Vec<Pedestrian>,
        occluder: Occluder,
        seed: u64,
    ) -> Self {
        EpisodeState {
            t: 0.0,
            ego_x,
            ego_v,
            last_action: 0.0,
            collided: false,
            has_moved: ego_v > ScenarioConfig::STOP_EPS,
            clamp_warnings: 0,
            peds,
            occluder,
            seed,
        }
    }
}

fn stream(seed: u64, label: &str) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"sim");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    ChaCha12Rng::from_seed(hasher.finalize().into())
}

/// Places the ego at rest and draws the pedestrian population for the
/// configured density and behavior.
pub fn init_episode(cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeState, SimError> {
    cfg.validate()?;
    let mut rng = stream(seed, "population");
    let (n, running_frac, unexpected_frac) = cfg.density.profile();

    let n_sudden = ((unexpected_frac * n as f64).round() as usize).max(1);
    let n_orderly = ((0.06 * n as f64).round() as usize).max(1);
    let n_running = (running_frac * n as f64).round() as usize;

    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let running: std::collections::HashSet<usize> =
        indices.into_iter().take(n_running).collect();

    let cw0 = cfg.crosswalk_pos;
    let mut peds = Vec::with_capacity(n);
    for id in 0..n {
        let speed = if running.contains(&id) {
            cfg.run_speed
        } else {
            cfg.walk_speed
        };
        let ped = if id < n_sudden {
            // The first staged crosser is the scenario's dedicated occluded
            // pedestrian: it always waits for the ego. The extras also carry
            // a schedule so the whole crowd cannot pile up on one arrival.
            let (trigger_gap, latest_t) = if id == 0 {
                (rng.random_range(10.0..18.0), f64::INFINITY)
            } else {
                (rng.random_range(8.0..26.0), rng.random_range(4.0..30.0))
            };
            let stage_y = rng.random_range(1.3..2.3);
            let x = rng.random_range(cw0 + 0.5..cw0 + 3.5);
            let approach = cfg.behavior == PedBehavior::BrieflyVisibleThenOccluded;
            Pedestrian {
                id,
                x,
                y: if approach { 4.8 } else { stage_y },
                speed,
                kind: PedKind::Sudden {
                    trigger_gap,
                    stage_y,
                    approach,
                    latest_t,
                },
                phase: Phase::Waiting,
            }
        } else if id < n_sudden + n_orderly {
            let from_sign = if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 };
            let start_t = rng.random_range(4.0..50.0);
            let x = rng.random_range(cw0 + 0.5..cw0 + cfg.crosswalk_depth - 0.5);
            Pedestrian {
                id,
                x,
                y: from_sign * 5.0,
                speed,
                kind: PedKind::Orderly { start_t, from_sign },
                phase: Phase::Waiting,
            }
        } else {
            let side = if rng.random_range(0.0..1.0) < 0.5 { 5.0 } else { -5.0 };
            let dir = if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 };
            let x = rng.random_range(5.0..cfg.road_length - 5.0);
            Pedestrian {
                id,
                x,
                y: side,
                speed,
                kind: PedKind::Walker { dir },
                phase: Phase::Waiting,
            }
        };
        peds.push(ped);
    }

    Ok(EpisodeState {
        t: 0.0,
        ego_x: 0.0,
        ego_v: 0.0,
        last_action: 0.0,
        collided: false,
        has_moved: false,
        clamp_warnings: 0,
        peds,
        occluder: Occluder::for_level(cfg.occlusion, cfg),
        seed,
    })
}

/// Advances one timestep: semi-implicit Euler for the ego, phase machines for
/// the pedestrians, then the collision test. Out-of-range actions are clamped
/// and counted.
pub fn step(state: &EpisodeState, action: f64, cfg: &ScenarioConfig) -> EpisodeState {
    let mut next = state.clone();
    let clamped = action.clamp(-1.0, 1.0);
    if clamped != action {
        next.clamp_warnings += 1;
    }
    next.last_action = clamped;

    let accel = clamped * cfg.a_max;
    next.ego_v = (state.ego_v + accel * cfg.dt).clamp(0.0, cfg.v_max);
    next.ego_x = state.ego_x + next.ego_v * cfg.dt;
    if next.ego_v > ScenarioConfig::STOP_EPS {
        next.has_moved = true;
    }
    next.t = state.t + cfg.dt;

    for ped in &mut next.peds {
        match (&ped.kind, ped.phase) {
            (PedKind::Walker { dir }, _) => {
                ped.x += dir * ped.speed * cfg.dt;
                if ped.x <= 2.0 || ped.x >= cfg.road_length - 2.0 {
                    let flipped = -dir;
                    ped.x = ped.x.clamp(2.0, cfg.road_length - 2.0);
                    ped.kind = PedKind::Walker { dir: flipped };
                }
            }
            (PedKind::Orderly { start_t, .. }, Phase::Waiting) => {
                if next.t >= *start_t {
                    ped.phase = Phase::Crossing;
                }
            }
            (PedKind::Orderly { from_sign, .. }, Phase::Crossing) => {
                let sign = *from_sign;
                ped.y -= sign * ped.speed * cfg.dt;
                if sign * ped.y <= -5.0 {
                    ped.y = -sign * 5.0;
                    ped.phase = Phase::Done;
                }
            }
            (
                PedKind::Sudden {
                    trigger_gap,
                    stage_y,
                    approach,
                    latest_t,
                },
                Phase::Waiting,
            ) => {
                let gap = ped.x - next.ego_x;
                if *approach && ped.y > *stage_y && gap <= trigger_gap + 25.0 {
                    ped.y = (ped.y - 0.35 * cfg.dt).max(*stage_y);
                }
                if (gap <= *trigger_gap && gap > -2.0) || next.t >= *latest_t {
                    ped.phase = Phase::Crossing;
                }
            }
            (PedKind::Sudden { .. }, Phase::Crossing) => {
                ped.y -= ped.speed * cfg.dt;
                if ped.y <= -5.0 {
                    ped.y = -5.0;
                    ped.phase = Phase::Done;
                }
            }
            _ => {}
        }
    }

    let lat_tol = ScenarioConfig::EGO_HALF_WIDTH + ScenarioConfig::PED_HALF_WIDTH;
    let lon_tol = ScenarioConfig::EGO_HALF_LEN + ScenarioConfig::PED_HALF_LEN;
    for ped in &next.peds {
        if ped.on_road(cfg)
            && (ped.x - next.ego_x).abs() <= lon_tol
            && (ped.y - cfg.ego_lane_y).abs() <= lat_tol
        {
            next.collided = true;
        }
    }
    next
}

/// Gap to the nearest on-road pedestrian ahead, ground truth. `None` when the
/// road ahead is clear of pedestrians.
pub fn nearest_road_pedestrian_gap(state: &EpisodeState, cfg: &ScenarioConfig) -> Option<f64> {
    state
        .peds
        .iter()
        .filter(|p| p.on_road(cfg) && p.x >= state.ego_x)
        .map(|p| p.x - state.ego_x)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// Time to collision: nearest-road-pedestrian gap over closing speed, or
/// +infinity when nothing is closing.
pub fn ttc(state: &EpisodeState, cfg: &ScenarioConfig) -> f64 {
    let Some(gap) = nearest_road_pedestrian_gap(state, cfg) else {
        return f64::INFINITY;
    };
    if state.ego_v > 0.0 {
        gap / state.ego_v
    } else {
        f64::INFINITY
    }
}

/// Ground-truth test: is any pedestrian on the crosswalk's roadway span?
pub fn crosswalk_occupied(state: &EpisodeState, cfg: &ScenarioConfig) -> bool {
    state.peds.iter().any(|p| p.on_crosswalk(cfg))
}

/// Gap to the nearest pedestrian occupying the crosswalk, clamped at zero.
pub fn crosswalk_pedestrian_gap(state: &EpisodeState, cfg: &ScenarioConfig) -> Option<f64> {
    state
        .peds
        .iter()
        .filter(|p| p.on_crosswalk(cfg))
        .map(|p| (p.x - state.ego_x).max(0.0))
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}
