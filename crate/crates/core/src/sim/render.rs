//! Schematic pinhole rendering of the world state into a semantic map.
//!
//! Ground surfaces are classified per pixel by back-projecting through the
//! flat-ground pinhole model; box entities (the parked occluder, pedestrians)
//! are painted farthest-first, so nearer bodies overwrite farther ones and
//! occlusion falls out of paint order. Per-entity confidence jitter comes
//! from streams seeded by `(episode seed, entity)`, so identical states
//! render identical maps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use super::{EpisodeState, Pedestrian, Phase, ScenarioConfig};
use crate::predicates::CameraModel;
use crate::scene::{default_classes, SemanticMap, DEFAULT_MAP_SIZE};

const MAP: usize = DEFAULT_MAP_SIZE;
const CX: f64 = (MAP / 2) as f64;
const CY: f64 = (MAP / 2) as f64;

fn jitter_stream(seed: u64, label: &str, id: usize) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"render");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update((id as u64).to_le_bytes());
    ChaCha12Rng::from_seed(hasher.finalize().into())
}

struct Painter {
    map: SemanticMap,
}

impl Painter {
    fn paint(&mut self, row: usize, col: usize, class: usize, conf: f64) {
        // Confidence is always drawn from [0.85, 1.0], far above the uniform
        // residual, so this cannot fail.
        self.map
            .paint_pixel(row, col, class, conf)
            .expect("rendered confidence keeps the class arg-max");
    }
}

/// A box entity to project: lateral extent, height, and a distance anchor.
struct BoxEnt {
    class: usize,
    near_x: f64,
    y_left: f64,
    y_right: f64,
    height: f64,
    stream_label: &'static str,
    stream_id: usize,
}

/// Renders the state into a 224x224 map with the 28-class layout. Entities
/// farther than `cfg.render_range` (or behind the camera) are omitted.
pub fn render_semantic_map(
    state: &EpisodeState,
    cam: &CameraModel,
    cfg: &ScenarioConfig,
) -> SemanticMap {
    let f = cam.focal_length_px;
    let h_cam = cfg.camera_height;
    let classes = default_classes();
    let road = classes.iter().position(|c| c == "road").unwrap();
    let sidewalk = classes.iter().position(|c| c == "sidewalk").unwrap();
    let crosswalk = classes.iter().position(|c| c == "crosswalk").unwrap();
    let vehicle = classes.iter().position(|c| c == "vehicle").unwrap();
    let pedestrian = classes.iter().position(|c| c == "pedestrian").unwrap();

    let map = SemanticMap::filled(MAP, MAP, classes, "background")
        .expect("default class layout is valid");
    let mut painter = Painter { map };

    // Ground pass: classify each below-horizon pixel by its world footprint.
    let mut road_rng = jitter_stream(state.seed, "ground_road", 0);
    let mut side_rng = jitter_stream(state.seed, "ground_sidewalk", 0);
    let mut cross_rng = jitter_stream(state.seed, "ground_crosswalk", 0);
    let cy = CY as usize;
    for row in (cy + 1)..MAP {
        let d = f * h_cam / (row as f64 - CY);
        if d > cfg.render_range {
            continue;
        }
        let x_world = state.ego_x + d;
        if x_world < 0.0 || x_world >= cfg.road_length {
            continue;
        }
        let on_crosswalk_span =
            x_world >= cfg.crosswalk_pos && x_world < cfg.crosswalk_pos + cfg.crosswalk_depth;
        for col in 0..MAP {
            let y_world = (col as f64 - CX) * d / f + cfg.ego_lane_y;
            if on_crosswalk_span
                && y_world >= -cfg.crosswalk_half_width
                && y_world < cfg.crosswalk_half_width
            {
                let c = cross_rng.random_range(0.85..1.0);
                painter.paint(row, col, crosswalk, c);
            } else if y_world >= -cfg.road_half_width && y_world < cfg.road_half_width {
                let c = road_rng.random_range(0.85..1.0);
                painter.paint(row, col, road, c);
            } else if y_world.abs() >= cfg.road_half_width && y_world.abs() < cfg.sidewalk_outer {
                let c = side_rng.random_range(0.85..1.0);
                painter.paint(row, col, sidewalk, c);
            }
        }
    }

    // Box pass, farthest first: nearer bodies overwrite farther ones.
    let mut boxes: Vec<BoxEnt> = Vec::new();
    let occ = &state.occluder;
    if occ.rear_x - state.ego_x <= cfg.vehicle_detection_range {
        boxes.push(BoxEnt {
            class: vehicle,
            near_x: occ.rear_x,
            y_left: occ.y_left,
            y_right: occ.y_right,
            height: occ.height,
            stream_label: "occluder",
            stream_id: 0,
        });
    }
    for ped in &state.peds {
        if ped.x - state.ego_x > cfg.ped_detection_range {
            continue;
        }
        boxes.push(BoxEnt {
            class: pedestrian,
            near_x: ped.x - ScenarioConfig::PED_HALF_LEN,
            y_left: ped.y - ScenarioConfig::PED_HALF_WIDTH,
            y_right: ped.y + ScenarioConfig::PED_HALF_WIDTH,
            height: ScenarioConfig::PED_HEIGHT,
            stream_label: "ped",
            stream_id: ped.id + 1,
        });
    }
    boxes.sort_by(|a, b| {
        b.near_x
            .partial_cmp(&a.near_x)
            .unwrap()
            .then(a.stream_id.cmp(&b.stream_id))
    });

    for ent in &boxes {
        // The visible rear face sits at the near distance; projecting the
        // box there keeps a nearer body's ground contact below anything
        // farther, which the occlusion ordering relies on.
        let d = ent.near_x - state.ego_x;
        if d > cfg.render_range || d < 1.0 {
            continue;
        }
        let c0 = (CX + f * (ent.y_left - cfg.ego_lane_y) / d).round();
        let width = ((f * (ent.y_right - ent.y_left) / d).round() as i64).max(1);
        let bottom = (CY + f * h_cam / d).round() as i64;
        let top = (CY + f * (h_cam - ent.height) / d).round() as i64;
        let mut rng = jitter_stream(state.seed, ent.stream_label, ent.stream_id);
        for row in top.max(0)..=bottom.min(MAP as i64 - 1) {
            for col in (c0 as i64).max(0)..((c0 as i64) + width).min(MAP as i64) {
                let conf = rng.random_range(0.85..1.0);
                painter.paint(row as usize, col as usize, ent.class, conf);
            }
        }
    }

    painter.map
}

/// Convenience: a pedestrian is currently drawn iff at least one pixel of the
/// map carries the pedestrian class.
#[cfg(test)]
fn any_pedestrian_pixels(map: &SemanticMap) -> bool {
    let ped = map.class_index("pedestrian").unwrap();
    (0..map.height()).any(|r| (0..map.width()).any(|c| map.argmax_at(r, c) == ped))
}
