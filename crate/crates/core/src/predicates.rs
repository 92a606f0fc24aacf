//! Uncertainty-bounded ground facts extracted from a semantic map.
//!
//! Three families: semantic class membership with bounds derived from mean
//! softmax confidence, spatial relations (ego-relative thirds, crosswalk
//! distance bands, pedestrian surface and proximity, occlusion ordering), and
//! explicit-negation facts asserted when their positive counterparts are
//! absent.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{label_entities, BBox, Entity, SceneError, SemanticMap};

#[derive(Debug, Error, PartialEq)]
pub enum PredicateError {
    #[error("fact bounds [{lower}, {upper}] are not ordered within [0, 1]")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("crosswalk bbox has zero pixel width")]
    ZeroPixelWidth,
    #[error("distance {0} is negative")]
    NegativeDistance(f64),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// A ground predicate with uncertainty bounds `[lower, upper] ⊆ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub pred: String,
    pub args: Vec<String>,
    #[serde(rename = "l")]
    pub lower: f64,
    #[serde(rename = "u")]
    pub upper: f64,
}

impl Fact {
    pub fn new<P: Into<String>>(
        pred: P,
        args: Vec<String>,
        lower: f64,
        upper: f64,
    ) -> Result<Self, PredicateError> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(PredicateError::InvalidBounds { lower, upper });
        }
        Ok(Fact {
            pred: pred.into(),
            args,
            lower,
            upper,
        })
    }

    /// Midpoint confidence.
    pub fn confidence(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// One fact per line, JSON.
    pub fn to_json_lines(facts: &[Fact]) -> String {
        facts
            .iter()
            .map(|f| serde_json::to_string(f).expect("fact serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({})@[{:.4},{:.4}]",
            self.pred,
            self.args.join(","),
            self.lower,
            self.upper
        )
    }
}

/// Pinhole intrinsics and known reference widths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraModel {
    /// Focal length in pixels.
    pub focal_length_px: f64,
    /// Real-world crosswalk width in meters (the pinhole reference object).
    pub crosswalk_width_m: f64,
    /// Camera height over the ground plane, meters.
    #[serde(default = "default_camera_height")]
    pub height_m: f64,
    /// Image row of the horizon under the flat-ground model.
    #[serde(default = "default_horizon_row")]
    pub horizon_row: f64,
}

fn default_camera_height() -> f64 {
    1.5
}

fn default_horizon_row() -> f64 {
    112.0
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            focal_length_px: 400.0,
            crosswalk_width_m: 3.5,
            height_m: default_camera_height(),
            horizon_row: default_horizon_row(),
        }
    }
}

impl CameraModel {
    /// Ground depth of an image row under the flat-ground model; rows at or
    /// above the horizon carry no depth.
    pub fn ground_depth(&self, row: f64) -> Option<f64> {
        if row > self.horizon_row {
            Some(self.focal_length_px * self.height_m / (row - self.horizon_row))
        } else {
            None
        }
    }
}

/// Band depth (pixels) for the neighbor window searches.
pub const BAND_PX: usize = 15;

/// The standing-surface band only counts ground this many meters nearer than
/// the entity's feet. Deeper rows belong to unrelated foreground and would
/// let perspective drown out the actual surface for distant entities.
pub const SURFACE_LOOKBACK_M: f64 = 3.0;

/// Lower ego-to-crosswalk distance threshold: below it the ego is "at" the
/// crosswalk, between it and [`APPROACH_FAR_M`] the ego is approaching.
pub const APPROACH_NEAR_M: f64 = 50.0;
pub const APPROACH_FAR_M: f64 = 200.0;

/// Bbox column intervals this close (pixels) count as overlapping for the
/// occlusion test; a nearer object painted over a farther one leaves the
/// clipped masks adjacent rather than overlapping.
pub const OCCLUSION_COL_SLACK: usize = 2;

pub const EGO: &str = "ego";

/// The dynamic and crosswalk entities of a scene, with stable identifiers.
#[derive(Debug, Clone, Default)]
pub struct SceneEntities {
    pub pedestrians: Vec<Entity>,
    pub vehicles: Vec<Entity>,
    pub trucks: Vec<Entity>,
    pub crosswalks: Vec<Entity>,
}

impl SceneEntities {
    pub fn extract(map: &SemanticMap) -> Result<Self, SceneError> {
        Ok(SceneEntities {
            pedestrians: label_entities(map, "pedestrian")?,
            vehicles: label_entities(map, "vehicle")?,
            trucks: label_entities(map, "truck")?,
            crosswalks: label_entities(map, "crosswalk")?,
        })
    }

    /// `(id, entity)` pairs for pedestrians, vehicles and trucks.
    pub fn dynamic(&self) -> impl Iterator<Item = (String, &Entity)> {
        self.pedestrians
            .iter()
            .map(|e| (ped_id(e.id), e))
            .chain(self.vehicles.iter().map(|e| (vehicle_id(e.id), e)))
            .chain(self.trucks.iter().map(|e| (truck_id(e.id), e)))
    }

    /// All identified entities including crosswalks.
    pub fn all(&self) -> impl Iterator<Item = (String, &Entity)> {
        self.dynamic()
            .chain(self.crosswalks.iter().map(|e| (crosswalk_id(e.id), e)))
    }
}

pub fn ped_id(i: usize) -> String {
    format!("p{i}")
}
pub fn vehicle_id(i: usize) -> String {
    format!("v{i}")
}
pub fn truck_id(i: usize) -> String {
    format!("t{i}")
}
pub fn crosswalk_id(i: usize) -> String {
    format!("cw{i}")
}

fn class_predicate(class_name: &str) -> &'static str {
    match class_name {
        "pedestrian" => "Pedestrian",
        "vehicle" => "Vehicle",
        "truck" => "Truck",
        "crosswalk" => "Crosswalk",
        _ => unreachable!("only the four fact-bearing classes are labeled"),
    }
}

fn semantic_bounds(tau: f64) -> (f64, f64) {
    ((0.95 * tau).clamp(0.0, 1.0), (1.05 * tau).clamp(0.0, 1.0))
}

/// Class-membership facts with bounds `[0.95 τ̂, 1.05 τ̂]` clamped to `[0, 1]`.
pub fn semantic_facts(map: &SemanticMap) -> Result<Vec<Fact>, PredicateError> {
    let entities = SceneEntities::extract(map)?;
    semantic_facts_for(map, &entities)
}

pub fn semantic_facts_for(
    map: &SemanticMap,
    entities: &SceneEntities,
) -> Result<Vec<Fact>, PredicateError> {
    let mut facts = Vec::new();
    for (id, e) in entities.all() {
        let tau = crate::scene::entity_confidence(map, e)?;
        let (lo, hi) = semantic_bounds(tau);
        facts.push(Fact::new(class_predicate(&e.class_name), vec![id], lo, hi)?);
    }
    Ok(facts)
}

/// Looks up an entity's semantic bounds from previously computed facts.
fn bounds_of(facts: &[Fact], id: &str) -> (f64, f64) {
    facts
        .iter()
        .find(|f| f.args.len() == 1 && f.args[0] == id && is_class_pred(&f.pred))
        .map(|f| (f.lower, f.upper))
        .unwrap_or((1.0, 1.0))
}

fn is_class_pred(p: &str) -> bool {
    matches!(p, "Pedestrian" | "Vehicle" | "Truck" | "Crosswalk")
}

/// Exactly one of LeftOf/CenterOf/RightOf per dynamic entity, by centroid
/// column against the vertical thirds of the map. Boundary centroids classify
/// as CenterOf.
pub fn ego_relative_facts(
    entities: &SceneEntities,
    map: &SemanticMap,
    semantic: &[Fact],
) -> Result<Vec<Fact>, PredicateError> {
    let w = map.width() as f64;
    let mut facts = Vec::new();
    for (id, e) in entities.dynamic() {
        let col = e.centroid.1;
        let pred = if col < w / 3.0 {
            "LeftOf"
        } else if col > 2.0 * w / 3.0 {
            "RightOf"
        } else {
            "CenterOf"
        };
        let (lo, hi) = bounds_of(semantic, &id);
        facts.push(Fact::new(pred, vec![id, EGO.to_string()], lo, hi)?);
    }
    Ok(facts)
}

/// Pinhole range: `d = f * real_width / pixel_width` from the bbox column
/// extent.
pub fn crosswalk_distance(entity: &Entity, cam: &CameraModel) -> Result<f64, PredicateError> {
    let px = entity.bbox.width();
    if px == 0 {
        return Err(PredicateError::ZeroPixelWidth);
    }
    Ok(cam.focal_length_px * cam.crosswalk_width_m / px as f64)
}

/// Distance-band facts for the ego against one crosswalk. Bounds are `[1, 1]`:
/// the classification is a geometric derivation, not a measurement.
pub fn approach_facts(distance_m: f64, crosswalk: &str) -> Result<Vec<Fact>, PredicateError> {
    if distance_m < 0.0 {
        return Err(PredicateError::NegativeDistance(distance_m));
    }
    let args = vec![EGO.to_string(), crosswalk.to_string()];
    if (APPROACH_NEAR_M..=APPROACH_FAR_M).contains(&distance_m) {
        Ok(vec![Fact::new("Approaching", args, 1.0, 1.0)?])
    } else if distance_m < APPROACH_NEAR_M {
        Ok(vec![Fact::new("IsAt", args, 1.0, 1.0)?])
    } else {
        Ok(vec![])
    }
}

/// What a pedestrian is standing on, decided by the below-band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Road,
    Crosswalk,
}

#[derive(Debug, Clone, Copy)]
struct Band {
    min_row: usize,
    min_col: usize,
    max_row: usize,
    max_col: usize,
}

fn below_band(bbox: &BBox, map: &SemanticMap) -> Option<Band> {
    if bbox.max_row + 1 >= map.height() {
        return None;
    }
    Some(Band {
        min_row: bbox.max_row + 1,
        max_row: (bbox.max_row + BAND_PX).min(map.height() - 1),
        min_col: bbox.min_col,
        max_col: bbox.max_col,
    })
}

fn side_bands(bbox: &BBox, map: &SemanticMap) -> Vec<Band> {
    let mut bands = Vec::new();
    if bbox.min_col > 0 {
        bands.push(Band {
            min_row: bbox.min_row,
            max_row: bbox.max_row,
            min_col: bbox.min_col.saturating_sub(BAND_PX),
            max_col: bbox.min_col - 1,
        });
    }
    if bbox.max_col + 1 < map.width() {
        bands.push(Band {
            min_row: bbox.min_row,
            max_row: bbox.max_row,
            min_col: bbox.max_col + 1,
            max_col: (bbox.max_col + BAND_PX).min(map.width() - 1),
        });
    }
    bands
}

/// Majority surface class in the band directly below the bbox. Ties resolve
/// crosswalk > road > sidewalk; a sidewalk majority (or an empty band) yields
/// `None`. With a camera model, the band is depth-limited to ground near the
/// entity's feet ([`SURFACE_LOOKBACK_M`]). Also reports which below-band
/// pixels were crosswalk, for occupancy attribution.
pub fn pedestrian_surface(
    map: &SemanticMap,
    entity: &Entity,
    cam: Option<&CameraModel>,
) -> Option<Surface> {
    surface_with_band(map, entity, cam).0
}

fn surface_with_band(
    map: &SemanticMap,
    entity: &Entity,
    cam: Option<&CameraModel>,
) -> (Option<Surface>, Vec<(u16, u16)>) {
    let Some(mut band) = below_band(&entity.bbox, map) else {
        return (None, Vec::new());
    };
    if let Some(cam) = cam {
        if let Some(feet_depth) = cam.ground_depth(entity.bbox.max_row as f64) {
            let min_depth = feet_depth - SURFACE_LOOKBACK_M;
            if min_depth > 0.0 {
                let deepest_row =
                    cam.horizon_row + cam.focal_length_px * cam.height_m / min_depth;
                band.max_row = band.max_row.min(deepest_row.floor() as usize);
                if band.max_row < band.min_row {
                    return (None, Vec::new());
                }
            }
        }
    }
    let road = map.class_index("road");
    let crosswalk = map.class_index("crosswalk");
    let sidewalk = map.class_index("sidewalk");
    let (mut n_road, mut n_cross, mut n_side) = (0usize, 0usize, 0usize);
    let mut crosswalk_pixels = Vec::new();
    for r in band.min_row..=band.max_row {
        for c in band.min_col..=band.max_col {
            let k = map.argmax_at(r, c);
            if Some(k) == road {
                n_road += 1;
            } else if Some(k) == crosswalk {
                n_cross += 1;
                crosswalk_pixels.push((r as u16, c as u16));
            } else if Some(k) == sidewalk {
                n_side += 1;
            }
        }
    }
    if n_road == 0 && n_cross == 0 && n_side == 0 {
        return (None, crosswalk_pixels);
    }
    let surface = if n_cross >= n_road && n_cross >= n_side {
        Some(Surface::Crosswalk)
    } else if n_road >= n_side {
        Some(Surface::Road)
    } else {
        None
    };
    (surface, crosswalk_pixels)
}

fn mask_intersects_band(entity: &Entity, band: &Band) -> bool {
    if entity.bbox.max_row < band.min_row
        || entity.bbox.min_row > band.max_row
        || entity.bbox.max_col < band.min_col
        || entity.bbox.min_col > band.max_col
    {
        return false;
    }
    entity.mask.iter().any(|&(r, c)| {
        (band.min_row..=band.max_row).contains(&(r as usize))
            && (band.min_col..=band.max_col).contains(&(c as usize))
    })
}

/// OnRoad/OnCrosswalk from the below-band surface test, plus IsNear for each
/// vehicle or truck whose mask touches any of the three bands. Bounds inherit
/// the pedestrian's semantic bounds. Returns the ids of crosswalks the
/// pedestrian stands on, for later negation facts.
pub fn pedestrian_context_facts(
    pedestrian: &Entity,
    ped_id_str: &str,
    entities: &SceneEntities,
    map: &SemanticMap,
    cam: Option<&CameraModel>,
    semantic: &[Fact],
) -> Result<(Vec<Fact>, BTreeSet<String>), PredicateError> {
    let (lo, hi) = bounds_of(semantic, ped_id_str);
    let mut facts = Vec::new();
    let mut occupied = BTreeSet::new();

    let (surface, band_cross_pixels) = surface_with_band(map, pedestrian, cam);
    match surface {
        Some(Surface::Crosswalk) => {
            facts.push(Fact::new(
                "OnCrosswalk",
                vec![ped_id_str.to_string()],
                lo,
                hi,
            )?);
            if let Some(cw) = owning_crosswalk(&band_cross_pixels, entities) {
                occupied.insert(cw);
            }
        }
        Some(Surface::Road) => {
            facts.push(Fact::new("OnRoad", vec![ped_id_str.to_string()], lo, hi)?);
        }
        None => {}
    }

    let mut bands = side_bands(&pedestrian.bbox, map);
    if let Some(b) = below_band(&pedestrian.bbox, map) {
        bands.push(b);
    }
    for (vid, v) in entities
        .vehicles
        .iter()
        .map(|e| (vehicle_id(e.id), e))
        .chain(entities.trucks.iter().map(|e| (truck_id(e.id), e)))
    {
        if bands.iter().any(|b| mask_intersects_band(v, b)) {
            facts.push(Fact::new(
                "IsNear",
                vec![ped_id_str.to_string(), vid],
                lo,
                hi,
            )?);
        }
    }
    Ok((facts, occupied))
}

/// Attributes below-band crosswalk pixels to the crosswalk entity owning the
/// most of them.
fn owning_crosswalk(pixels: &[(u16, u16)], entities: &SceneEntities) -> Option<String> {
    if pixels.is_empty() || entities.crosswalks.is_empty() {
        return None;
    }
    let mut lookup: HashMap<(u16, u16), usize> = HashMap::new();
    for cw in &entities.crosswalks {
        for &px in &cw.mask {
            lookup.insert(px, cw.id);
        }
    }
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for px in pixels {
        if let Some(&id) = lookup.get(px) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .max_by_key(|&(id, n)| (n, std::cmp::Reverse(id)))
        .map(|(id, _)| crosswalk_id(id))
}

/// `Occludes(X, Y)` when the bbox column intervals overlap (or sit within
/// [`OCCLUSION_COL_SLACK`] pixels — a nearer entity painted over a farther one
/// clips the farther mask to adjacency) and X's bbox bottom row is strictly
/// lower in the image. Bounds are the element-wise min of the two entities'
/// semantic bounds.
pub fn occlusion_facts(
    entities: &SceneEntities,
    semantic: &[Fact],
) -> Result<Vec<Fact>, PredicateError> {
    let all: Vec<(String, &Entity)> = entities.all().collect();
    let mut facts = Vec::new();
    for (xi, (x_id, x)) in all.iter().enumerate() {
        for (yi, (y_id, y)) in all.iter().enumerate() {
            if xi == yi {
                continue;
            }
            let cols_touch = x.bbox.min_col <= y.bbox.max_col + OCCLUSION_COL_SLACK
                && y.bbox.min_col <= x.bbox.max_col + OCCLUSION_COL_SLACK;
            if cols_touch && x.bbox.max_row > y.bbox.max_row {
                let (xl, xu) = bounds_of(semantic, x_id);
                let (yl, yu) = bounds_of(semantic, y_id);
                facts.push(Fact::new(
                    "Occludes",
                    vec![x_id.clone(), y_id.clone()],
                    xl.min(yl),
                    xu.min(yu),
                )?);
            }
        }
    }
    Ok(facts)
}

/// Explicit-negation facts, all at bounds `[1, 1]` (definitional absences):
/// IsClear per unoccupied crosswalk, NoCrosswalk when no crosswalk entity
/// exists, EmptyLane when no vehicle or truck is CenterOf the ego.
pub fn negation_facts(
    facts: &[Fact],
    entities: &SceneEntities,
    occupied_crosswalks: &BTreeSet<String>,
) -> Result<Vec<Fact>, PredicateError> {
    let mut out = Vec::new();
    for cw in &entities.crosswalks {
        let id = crosswalk_id(cw.id);
        if !occupied_crosswalks.contains(&id) {
            out.push(Fact::new("IsClear", vec![id], 1.0, 1.0)?);
        }
    }
    if entities.crosswalks.is_empty() {
        out.push(Fact::new("NoCrosswalk", vec![EGO.to_string()], 1.0, 1.0)?);
    }
    let lane_blocked = facts.iter().any(|f| {
        f.pred == "CenterOf"
            && f.args.len() == 2
            && f.args[1] == EGO
            && (f.args[0].starts_with('v') || f.args[0].starts_with('t'))
    });
    if !lane_blocked {
        out.push(Fact::new("EmptyLane", vec![EGO.to_string()], 1.0, 1.0)?);
    }
    Ok(out)
}

/// Runs the full extraction pipeline and returns facts sorted by
/// `(predicate, args)`.
pub fn extract_facts(map: &SemanticMap, cam: &CameraModel) -> Result<Vec<Fact>, PredicateError> {
    let entities = SceneEntities::extract(map)?;
    extract_facts_for(map, cam, &entities)
}

pub fn extract_facts_for(
    map: &SemanticMap,
    cam: &CameraModel,
    entities: &SceneEntities,
) -> Result<Vec<Fact>, PredicateError> {
    let semantic = semantic_facts_for(map, entities)?;
    let mut facts = semantic.clone();
    facts.extend(ego_relative_facts(entities, map, &semantic)?);

    for cw in &entities.crosswalks {
        let d = crosswalk_distance(cw, cam)?;
        facts.extend(approach_facts(d, &crosswalk_id(cw.id))?);
    }

    let mut occupied = BTreeSet::new();
    for ped in &entities.pedestrians {
        let (ctx, occ) =
            pedestrian_context_facts(ped, &ped_id(ped.id), entities, map, Some(cam), &semantic)?;
        facts.extend(ctx);
        occupied.extend(occ);
    }

    facts.extend(occlusion_facts(entities, &semantic)?);
    let negations = negation_facts(&facts, entities, &occupied)?;
    facts.extend(negations);

    facts.sort_by(|a, b| (&a.pred, &a.args).cmp(&(&b.pred, &b.args)));
    Ok(facts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_semantic_map, SceneSpec, ShapeSpec};

    fn rect(class: &str, r: usize, c: usize, h: usize, w: usize, conf: f64) -> ShapeSpec {
        ShapeSpec {
            class: class.into(),
            rect: [r, c, h, w],
            confidence: conf,
        }
    }

    fn scene(shapes: Vec<ShapeSpec>) -> SemanticMap {
        build_semantic_map(&SceneSpec {
            height: 224,
            width: 224,
            background: "road".into(),
            shapes,
            classes: None,
        })
        .unwrap()
    }

    fn find<'a>(facts: &'a [Fact], pred: &str) -> Vec<&'a Fact> {
        facts.iter().filter(|f| f.pred == pred).collect()
    }

    #[test]
    fn semantic_bounds_are_five_percent_each_side() {
        let map = scene(vec![rect("pedestrian", 10, 10, 5, 5, 0.9)]);
        let facts = semantic_facts(&map).unwrap();
        let ped = find(&facts, "Pedestrian");
        assert_eq!(ped.len(), 1);
        assert!((ped[0].lower - 0.855).abs() < 1e-9);
        assert!((ped[0].upper - 0.945).abs() < 1e-9);
    }

    #[test]
    fn semantic_bounds_clamp_at_one() {
        let map = scene(vec![rect("vehicle", 10, 10, 5, 5, 1.0)]);
        let facts = semantic_facts(&map).unwrap();
        let v = find(&facts, "Vehicle")[0];
        assert!((v.lower - 0.95).abs() < 1e-9);
        assert_eq!(v.upper, 1.0);
    }

    #[test]
    fn empty_map_has_no_semantic_facts() {
        let map = scene(vec![]);
        assert!(semantic_facts(&map).unwrap().is_empty());
    }

    #[test]
    fn thirds_classification_with_center_tiebreak() {
        // Width 224: left third ends at 74.67, right begins at 149.33.
        let map = scene(vec![
            rect("pedestrian", 10, 5, 5, 11, 0.9),    // centroid col 10
            rect("pedestrian", 60, 107, 5, 11, 0.9),  // centroid col 112
            rect("pedestrian", 120, 200, 5, 11, 0.9), // centroid col 205
        ]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let facts = ego_relative_facts(&entities, &map, &semantic).unwrap();
        assert_eq!(find(&facts, "LeftOf").len(), 1);
        assert_eq!(find(&facts, "CenterOf").len(), 1);
        assert_eq!(find(&facts, "RightOf").len(), 1);
        assert_eq!(find(&facts, "LeftOf")[0].args[0], "p0");
        assert_eq!(find(&facts, "RightOf")[0].args[0], "p2");
    }

    #[test]
    fn boundary_centroid_is_center() {
        // Centroid col exactly 224/3: cols 73..76 have mean 74.6667 — build an
        // asymmetric mask instead: single-pixel column at exactly... use a map
        // of width 6 so the boundary lands on 2.0.
        let map = build_semantic_map(&SceneSpec {
            height: 8,
            width: 6,
            background: "road".into(),
            shapes: vec![rect("pedestrian", 1, 2, 2, 1, 0.9)],
            classes: None,
        })
        .unwrap();
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let facts = ego_relative_facts(&entities, &map, &semantic).unwrap();
        // centroid col = 2.0 = width/3 exactly: not < 2.0, so CenterOf.
        assert_eq!(facts[0].pred, "CenterOf");
    }

    #[test]
    fn pinhole_distance_examples() {
        let map = scene(vec![rect("crosswalk", 120, 100, 4, 28, 0.95)]);
        let cw = &SceneEntities::extract(&map).unwrap().crosswalks[0];
        let cam = CameraModel::default();
        let d = crosswalk_distance(cw, &cam).unwrap();
        assert!((d - 50.0).abs() < 1e-12);

        let half = scene(vec![rect("crosswalk", 120, 100, 4, 14, 0.95)]);
        let cw2 = &SceneEntities::extract(&half).unwrap().crosswalks[0];
        assert!((crosswalk_distance(cw2, &cam).unwrap() - 100.0).abs() < 1e-12);

        let narrow = scene(vec![rect("crosswalk", 120, 100, 4, 7, 0.95)]);
        let cw3 = &SceneEntities::extract(&narrow).unwrap().crosswalks[0];
        assert!((crosswalk_distance(cw3, &cam).unwrap() - 200.0).abs() < 1e-12);
    }

    #[test]
    fn approach_bands() {
        assert_eq!(approach_facts(120.0, "cw0").unwrap()[0].pred, "Approaching");
        assert_eq!(approach_facts(49.9, "cw0").unwrap()[0].pred, "IsAt");
        assert!(approach_facts(250.0, "cw0").unwrap().is_empty());
        assert_eq!(approach_facts(50.0, "cw0").unwrap()[0].pred, "Approaching");
        assert_eq!(approach_facts(200.0, "cw0").unwrap()[0].pred, "Approaching");
        assert!(matches!(
            approach_facts(-1.0, "cw0"),
            Err(PredicateError::NegativeDistance(_))
        ));
    }

    #[test]
    fn surface_crosswalk_dominates_below_band() {
        let map = scene(vec![
            rect("crosswalk", 100, 80, 20, 60, 0.95),
            rect("pedestrian", 90, 100, 10, 6, 0.9),
        ]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let (facts, occupied) =
            pedestrian_context_facts(
                &entities.pedestrians[0],
                "p0",
                &entities,
                &map,
                None,
                &semantic,
            )
            .unwrap();
        assert_eq!(find(&facts, "OnCrosswalk").len(), 1);
        assert!(find(&facts, "OnRoad").is_empty());
        assert!(occupied.contains("cw0"));
    }

    #[test]
    fn surface_road_when_no_crosswalk_below() {
        let map = scene(vec![rect("pedestrian", 90, 100, 10, 6, 0.9)]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let (facts, occupied) =
            pedestrian_context_facts(
                &entities.pedestrians[0],
                "p0",
                &entities,
                &map,
                None,
                &semantic,
            )
            .unwrap();
        assert_eq!(find(&facts, "OnRoad").len(), 1);
        assert!(occupied.is_empty());
    }

    #[test]
    fn surface_sidewalk_gives_neither() {
        let map = scene(vec![
            rect("sidewalk", 100, 80, 30, 60, 0.95),
            rect("pedestrian", 90, 100, 10, 6, 0.9),
        ]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let (facts, _) =
            pedestrian_context_facts(
                &entities.pedestrians[0],
                "p0",
                &entities,
                &map,
                None,
                &semantic,
            )
            .unwrap();
        assert!(find(&facts, "OnRoad").is_empty());
        assert!(find(&facts, "OnCrosswalk").is_empty());
    }

    #[test]
    fn is_near_vehicle_in_side_band() {
        let map = scene(vec![
            rect("pedestrian", 90, 100, 10, 6, 0.9),
            rect("vehicle", 92, 110, 10, 20, 0.9), // 4 px right of the ped bbox
        ]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let (facts, _) =
            pedestrian_context_facts(
                &entities.pedestrians[0],
                "p0",
                &entities,
                &map,
                None,
                &semantic,
            )
            .unwrap();
        let near = find(&facts, "IsNear");
        assert_eq!(near.len(), 1);
        assert_eq!(near[0].args, vec!["p0".to_string(), "v0".to_string()]);
    }

    #[test]
    fn occlusion_requires_lower_bottom_and_column_contact() {
        // Vehicle overlapping crosswalk columns with a lower bottom edge.
        let map = scene(vec![
            rect("crosswalk", 100, 60, 10, 80, 0.95),
            rect("vehicle", 90, 100, 40, 30, 0.9),
        ]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let facts = occlusion_facts(&entities, &semantic).unwrap();
        assert!(facts
            .iter()
            .any(|f| f.pred == "Occludes" && f.args == vec!["v0", "cw0"]));
        // The crosswalk never occludes the vehicle (higher bottom row).
        assert!(!facts.iter().any(|f| f.args == vec!["cw0", "v0"]));
    }

    #[test]
    fn occlusion_skips_disjoint_columns_and_equal_bottoms() {
        let disjoint = scene(vec![
            rect("crosswalk", 100, 10, 10, 20, 0.95),
            rect("vehicle", 90, 100, 40, 30, 0.9),
        ]);
        let e1 = SceneEntities::extract(&disjoint).unwrap();
        let s1 = semantic_facts_for(&disjoint, &e1).unwrap();
        assert!(occlusion_facts(&e1, &s1).unwrap().is_empty());

        let equal = scene(vec![
            rect("crosswalk", 100, 60, 10, 60, 0.95),
            rect("vehicle", 80, 80, 30, 20, 0.9), // same bottom row 109
        ]);
        let e2 = SceneEntities::extract(&equal).unwrap();
        let s2 = semantic_facts_for(&equal, &e2).unwrap();
        assert!(occlusion_facts(&e2, &s2).unwrap().is_empty());
    }

    #[test]
    fn occlusion_bounds_are_pairwise_min() {
        let map = scene(vec![
            rect("crosswalk", 100, 60, 10, 80, 1.0),
            rect("vehicle", 90, 100, 40, 30, 0.9),
        ]);
        let entities = SceneEntities::extract(&map).unwrap();
        let semantic = semantic_facts_for(&map, &entities).unwrap();
        let f = &occlusion_facts(&entities, &semantic).unwrap()[0];
        assert!((f.lower - 0.855).abs() < 1e-9); // vehicle's 0.95*0.9
        assert!((f.upper - 0.945).abs() < 1e-9);
    }

    #[test]
    fn negation_facts_cover_all_three() {
        // Crosswalk present, no pedestrian: IsClear.
        let clear = scene(vec![rect("crosswalk", 100, 60, 10, 80, 0.95)]);
        let facts = extract_facts(&clear, &CameraModel::default()).unwrap();
        assert_eq!(find(&facts, "IsClear").len(), 1);
        assert!(find(&facts, "NoCrosswalk").is_empty());
        assert_eq!(find(&facts, "EmptyLane").len(), 1);

        // No crosswalk at all: NoCrosswalk.
        let empty = scene(vec![]);
        let facts = extract_facts(&empty, &CameraModel::default()).unwrap();
        assert_eq!(find(&facts, "NoCrosswalk").len(), 1);

        // A vehicle dead ahead removes EmptyLane.
        let blocked = scene(vec![rect("vehicle", 100, 100, 20, 24, 0.9)]);
        let facts = extract_facts(&blocked, &CameraModel::default()).unwrap();
        assert!(find(&facts, "EmptyLane").is_empty());
    }

    #[test]
    fn isclear_never_coasserted_with_occupied_crosswalk() {
        let map = scene(vec![
            rect("crosswalk", 100, 40, 20, 120, 0.95),
            rect("pedestrian", 90, 90, 10, 6, 0.9),
        ]);
        let facts = extract_facts(&map, &CameraModel::default()).unwrap();
        assert_eq!(find(&facts, "OnCrosswalk").len(), 1);
        assert!(find(&facts, "IsClear").is_empty());
    }

    #[test]
    fn facts_are_sorted_and_bounds_valid() {
        let map = scene(vec![
            rect("crosswalk", 100, 40, 20, 120, 0.95),
            rect("pedestrian", 90, 90, 10, 6, 0.9),
            rect("vehicle", 80, 150, 30, 40, 0.88),
        ]);
        let facts = extract_facts(&map, &CameraModel::default()).unwrap();
        for w in facts.windows(2) {
            assert!((&w[0].pred, &w[0].args) <= (&w[1].pred, &w[1].args));
        }
        for f in &facts {
            assert!(f.lower >= 0.0 && f.lower <= f.upper && f.upper <= 1.0, "{f}");
        }
    }

    #[test]
    fn exactly_one_thirds_fact_per_dynamic_entity() {
        let map = scene(vec![
            rect("pedestrian", 10, 5, 5, 5, 0.9),
            rect("vehicle", 40, 100, 10, 20, 0.9),
            rect("truck", 80, 190, 12, 20, 0.9),
        ]);
        let facts = extract_facts(&map, &CameraModel::default()).unwrap();
        let thirds: usize = ["LeftOf", "CenterOf", "RightOf"]
            .iter()
            .map(|p| find(&facts, p).len())
            .sum();
        assert_eq!(thirds, 3);
    }

    #[test]
    fn mirror_swaps_left_and_right() {
        let shapes = vec![
            rect("pedestrian", 10, 5, 5, 5, 0.9),
            rect("vehicle", 40, 150, 10, 20, 0.9),
            rect("crosswalk", 120, 30, 10, 56, 0.95),
        ];
        let mirrored: Vec<ShapeSpec> = shapes
            .iter()
            .map(|s| {
                let [r, c, h, w] = s.rect;
                ShapeSpec {
                    class: s.class.clone(),
                    rect: [r, 224 - c - w, h, w],
                    confidence: s.confidence,
                }
            })
            .collect();
        let cam = CameraModel::default();
        let facts = extract_facts(&scene(shapes), &cam).unwrap();
        let mfacts = extract_facts(&scene(mirrored), &cam).unwrap();

        let count = |fs: &[Fact], p: &str| fs.iter().filter(|f| f.pred == p).count();
        assert_eq!(count(&facts, "LeftOf"), count(&mfacts, "RightOf"));
        assert_eq!(count(&facts, "RightOf"), count(&mfacts, "LeftOf"));
        for pred in ["Pedestrian", "Vehicle", "Crosswalk", "OnRoad", "IsClear"] {
            assert_eq!(count(&facts, pred), count(&mfacts, pred), "{pred}");
        }
    }

    #[test]
    fn fact_json_lines_format() {
        let f = Fact::new("OnCrosswalk", vec!["p0".into()], 0.855, 0.945).unwrap();
        let line = Fact::to_json_lines(&[f]);
        assert_eq!(
            line,
            r#"{"pred":"OnCrosswalk","args":["p0"],"l":0.855,"u":0.945}"#
        );
        let back: Fact = serde_json::from_str(&line).unwrap();
        assert_eq!(back.upper, 0.945);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(Fact::new("X", vec![], 0.9, 0.5).is_err());
        assert!(Fact::new("X", vec![], -0.1, 0.5).is_err());
        assert!(Fact::new("X", vec![], 0.5, 1.2).is_err());
    }
}
