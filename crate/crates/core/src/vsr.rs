//! Scene encoding into a single Vector Semantic Representation.
//!
//! Per entity: a class vector, a neighbor vector built from 15-pixel bands
//! beside and below the bbox, and a shape/location vector over a 16x16 grid,
//! bound together and fused with a spatial-feature embedding. Entities are
//! then bundled with vulnerability weights into the scene hypervector.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hdc::{bind, weighted_bundle, Codebook, HdcError, Hypervector};
use crate::predicates::{pedestrian_surface, BAND_PX};
use crate::scene::{label_entities, Entity, SceneError, SemanticMap};

#[derive(Debug, Error, PartialEq)]
pub enum VsrError {
    #[error(transparent)]
    Hdc(#[from] HdcError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("spatial-feature embedding has length {found}, expected {expected}")]
    SfLengthMismatch { expected: usize, found: usize },
}

/// How the symbolic SSI vector and the spatial-feature embedding are fused
/// into one entity vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    Add,
    Multiply,
    SsiOnly,
    SfOnly,
}

impl FusionMode {
    pub fn parse(s: &str) -> Option<FusionMode> {
        match s {
            "add" => Some(FusionMode::Add),
            "multiply" => Some(FusionMode::Multiply),
            "ssi_only" => Some(FusionMode::SsiOnly),
            "sf_only" => Some(FusionMode::SfOnly),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FusionMode::Add => "add",
            FusionMode::Multiply => "multiply",
            FusionMode::SsiOnly => "ssi_only",
            FusionMode::SfOnly => "sf_only",
        }
    }
}

/// Entity weights for the final bundling, keyed by vulnerability and
/// occlusion potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VsrWeights {
    pub pedestrian_on_road_or_crosswalk: f64,
    pub pedestrian_on_sidewalk: f64,
    pub vehicle: f64,
    pub truck: f64,
}

impl Default for VsrWeights {
    fn default() -> Self {
        VsrWeights {
            pedestrian_on_road_or_crosswalk: 1.0,
            pedestrian_on_sidewalk: 0.50,
            vehicle: 0.50,
            truck: 0.75,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VsrConfig {
    pub dim: usize,
    pub grid_size: usize,
    /// Depth in pixels of the neighbor search bands.
    pub neighbor_window: usize,
    pub weights: VsrWeights,
    pub fusion: FusionMode,
    /// Normalize C/N/S constituents before binding (off by default; the
    /// algebraic identities stay exact without it).
    pub normalize_components: bool,
}

impl Default for VsrConfig {
    fn default() -> Self {
        VsrConfig {
            dim: 2048,
            grid_size: 16,
            neighbor_window: BAND_PX,
            weights: VsrWeights::default(),
            fusion: FusionMode::Add,
            normalize_components: false,
        }
    }
}

/// The semantic classes that receive codebook symbols.
pub const RELEVANT_CLASSES: [&str; 6] = [
    "pedestrian",
    "vehicle",
    "truck",
    "road",
    "crosswalk",
    "sidewalk",
];

/// Neighbor directions searched around an entity, in fixed order.
pub const DIRECTIONS: [&str; 3] = ["left_of", "right_of", "below_of"];

pub fn grid_symbol(row: usize, col: usize) -> String {
    format!("grid_{row}_{col}")
}

/// Builds the codebook holding class, direction, and grid-cell symbols.
pub fn scene_codebook(seed: u64, cfg: &VsrConfig) -> Result<Codebook, VsrError> {
    let mut symbols: Vec<String> = RELEVANT_CLASSES.iter().map(|s| s.to_string()).collect();
    symbols.extend(DIRECTIONS.iter().map(|s| s.to_string()));
    for r in 0..cfg.grid_size {
        for c in 0..cfg.grid_size {
            symbols.push(grid_symbol(r, c));
        }
    }
    Ok(Codebook::new(seed, cfg.dim, symbols)?)
}

/// The codebook vector for the entity's class.
pub fn class_vector(entity: &Entity, cb: &Codebook) -> Result<Hypervector, VsrError> {
    Ok(cb.require(&entity.class_name)?.clone())
}

fn maybe_normalize(v: Hypervector, cfg: &VsrConfig) -> Hypervector {
    if cfg.normalize_components {
        v.normalized().unwrap_or(v)
    } else {
        v
    }
}

/// Bundled class-direction-class triples for every relevant class found in
/// the three bands around the bbox. An entity with empty bands gets the unit
/// impulse so the later binding is a no-op.
pub fn neighbor_vector(
    entity: &Entity,
    map: &SemanticMap,
    cb: &Codebook,
    cfg: &VsrConfig,
) -> Result<Hypervector, VsrError> {
    let band = cfg.neighbor_window;
    let bbox = &entity.bbox;
    let h = map.height();
    let w = map.width();

    // (min_row, max_row, min_col, max_col) per direction, map-clipped.
    let mut regions: Vec<(&str, usize, usize, usize, usize)> = Vec::new();
    if bbox.min_col > 0 {
        regions.push((
            "left_of",
            bbox.min_row,
            bbox.max_row,
            bbox.min_col.saturating_sub(band),
            bbox.min_col - 1,
        ));
    }
    if bbox.max_col + 1 < w {
        regions.push((
            "right_of",
            bbox.min_row,
            bbox.max_row,
            bbox.max_col + 1,
            (bbox.max_col + band).min(w - 1),
        ));
    }
    if bbox.max_row + 1 < h {
        regions.push((
            "below_of",
            bbox.max_row + 1,
            (bbox.max_row + band).min(h - 1),
            bbox.min_col,
            bbox.max_col,
        ));
    }

    let entity_class = cb.require(&entity.class_name)?;
    let mut triples: Vec<Hypervector> = Vec::new();
    for dir in DIRECTIONS {
        let Some(&(_, r0, r1, c0, c1)) = regions.iter().find(|r| r.0 == dir) else {
            continue;
        };
        let mut found = [false; RELEVANT_CLASSES.len()];
        for r in r0..=r1 {
            for c in c0..=c1 {
                let k = map.argmax_at(r, c);
                let name = &map.classes()[k];
                if let Some(i) = RELEVANT_CLASSES.iter().position(|rc| rc == name) {
                    found[i] = true;
                }
            }
        }
        for (i, class) in RELEVANT_CLASSES.iter().enumerate() {
            if found[i] {
                let neighbor = cb.require(class)?;
                let direction = cb.require(dir)?;
                triples.push(bind(neighbor, &bind(direction, entity_class)?)?);
            }
        }
    }

    if triples.is_empty() {
        return Ok(Hypervector::unit_impulse(cfg.dim));
    }
    Ok(weighted_bundle(triples.iter().map(|t| (t, 1.0)))?)
}

/// The entity's cell-occupancy fractions over the `grid_size^2` tiling,
/// flattened row-major. Cell area is the actual (edge-clipped) cell size.
pub fn occupancy_grid(entity: &Entity, map: &SemanticMap, grid_size: usize) -> Vec<f64> {
    let g = grid_size;
    let h = map.height();
    let w = map.width();
    let mut counts = vec![0usize; g * g];
    for &(r, c) in &entity.mask {
        let gr = (r as usize * g / h).min(g - 1);
        let gc = (c as usize * g / w).min(g - 1);
        counts[gr * g + gc] += 1;
    }
    let mut rho = vec![0.0; g * g];
    for gr in 0..g {
        let r0 = gr * h / g;
        let r1 = (gr + 1) * h / g;
        for gc in 0..g {
            let c0 = gc * w / g;
            let c1 = (gc + 1) * w / g;
            let area = (r1 - r0) * (c1 - c0);
            if area > 0 {
                rho[gr * g + gc] = counts[gr * g + gc] as f64 / area as f64;
            }
        }
    }
    rho
}

/// Weighted bundle of grid-cell vectors, each weighted by the fraction of the
/// cell covered by the entity.
pub fn shape_location_vector(
    entity: &Entity,
    map: &SemanticMap,
    cb: &Codebook,
    cfg: &VsrConfig,
) -> Result<Hypervector, VsrError> {
    let g = cfg.grid_size;
    let rho = occupancy_grid(entity, map, g);
    let mut pairs: Vec<(&Hypervector, f64)> = Vec::new();
    for gr in 0..g {
        for gc in 0..g {
            let weight = rho[gr * g + gc];
            if weight > 0.0 {
                pairs.push((cb.require(&grid_symbol(gr, gc))?, weight));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(Hypervector::zeros(cfg.dim));
    }
    Ok(weighted_bundle(pairs)?)
}

/// `SSI = C ⊗ N ⊗ S` for one entity.
pub fn ssi(
    entity: &Entity,
    map: &SemanticMap,
    cb: &Codebook,
    cfg: &VsrConfig,
) -> Result<Hypervector, VsrError> {
    let c = maybe_normalize(class_vector(entity, cb)?, cfg);
    let n = maybe_normalize(neighbor_vector(entity, map, cb, cfg)?, cfg);
    let s = maybe_normalize(shape_location_vector(entity, map, cb, cfg)?, cfg);
    Ok(bind(&c, &bind(&n, &s)?)?)
}

/// Fuses the symbolic and spatial-feature parts into the entity vector.
pub fn entity_vector(
    ssi_v: &Hypervector,
    sf_v: &[f64],
    mode: FusionMode,
) -> Result<Hypervector, VsrError> {
    if ssi_v.dim() != sf_v.len() {
        return Err(VsrError::SfLengthMismatch {
            expected: ssi_v.dim(),
            found: sf_v.len(),
        });
    }
    let values = match mode {
        FusionMode::Add => ssi_v
            .values()
            .iter()
            .zip(sf_v)
            .map(|(a, b)| a + b)
            .collect(),
        FusionMode::Multiply => ssi_v
            .values()
            .iter()
            .zip(sf_v)
            .map(|(a, b)| a * b)
            .collect(),
        FusionMode::SsiOnly => ssi_v.values().to_vec(),
        FusionMode::SfOnly => sf_v.to_vec(),
    };
    Ok(Hypervector::from_values(values))
}

/// Produces the per-entity spatial-feature embedding. Implementations must be
/// deterministic in their inputs and emit vectors of length `dim`.
pub trait SfProvider {
    fn dim(&self) -> usize;
    fn embed(&self, map: &SemanticMap, entity: &Entity) -> Vec<f64>;
}

/// Deterministic stand-in for a learned embedding: a seeded Gaussian random
/// projection of the entity's occupancy grid, scaled to unit norm.
pub struct StubSfProvider {
    dim: usize,
    grid_size: usize,
    projection: Vec<f64>, // dim x grid_size^2, row-major
}

impl StubSfProvider {
    pub fn new(seed: u64, cfg: &VsrConfig) -> Self {
        let dim = cfg.dim;
        let cells = cfg.grid_size * cfg.grid_size;
        let mut hasher = Sha256::new();
        hasher.update(b"sf_projection");
        hasher.update(seed.to_le_bytes());
        hasher.update((dim as u64).to_le_bytes());
        hasher.update((cells as u64).to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(hasher.finalize().into());
        let projection = (0..dim * cells)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        StubSfProvider {
            dim,
            grid_size: cfg.grid_size,
            projection,
        }
    }
}

impl SfProvider for StubSfProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, map: &SemanticMap, entity: &Entity) -> Vec<f64> {
        let occ = occupancy_grid(entity, map, self.grid_size);
        let cells = occ.len();
        let mut out = vec![0.0; self.dim];
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.projection[i * cells..(i + 1) * cells];
            *slot = row.iter().zip(&occ).map(|(a, b)| a * b).sum();
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut out {
                *x /= norm;
            }
        }
        out
    }
}

/// The encoded scene plus an emptiness flag: a scene with no dynamic entities
/// legitimately encodes to the zero vector.
#[derive(Debug, Clone)]
pub struct VsrOutput {
    pub vector: Hypervector,
    pub entity_count: usize,
}

impl VsrOutput {
    pub fn is_empty(&self) -> bool {
        self.entity_count == 0
    }
}

/// Weight for one dynamic entity, with the pedestrian weight picked by the
/// same band test the predicate extractor uses.
fn entity_weight(entity: &Entity, map: &SemanticMap, weights: &VsrWeights) -> f64 {
    match entity.class_name.as_str() {
        "vehicle" => weights.vehicle,
        "truck" => weights.truck,
        _ => match pedestrian_surface(map, entity, None) {
            Some(_) => weights.pedestrian_on_road_or_crosswalk,
            None => weights.pedestrian_on_sidewalk,
        },
    }
}

/// `VSR = Σ w_i · E_i` over all dynamic entities, summed in a fixed
/// `(class, min_row, min_col)` order so the result is independent of
/// enumeration order.
pub fn encode_scene(
    map: &SemanticMap,
    cb: &Codebook,
    cfg: &VsrConfig,
    sf: &dyn SfProvider,
) -> Result<VsrOutput, VsrError> {
    let mut entities: Vec<Entity> = Vec::new();
    for class in ["pedestrian", "vehicle", "truck"] {
        entities.extend(label_entities(map, class)?);
    }
    entities.sort_by(|a, b| {
        (&a.class_name, a.bbox.min_row, a.bbox.min_col).cmp(&(
            &b.class_name,
            b.bbox.min_row,
            b.bbox.min_col,
        ))
    });

    if entities.is_empty() {
        return Ok(VsrOutput {
            vector: Hypervector::zeros(cfg.dim),
            entity_count: 0,
        });
    }

    let mut weighted: Vec<(Hypervector, f64)> = Vec::new();
    for e in &entities {
        let ssi_v = ssi(e, map, cb, cfg)?;
        let sf_v = sf.embed(map, e);
        let ev = entity_vector(&ssi_v, &sf_v, cfg.fusion)?;
        weighted.push((ev, entity_weight(e, map, &cfg.weights)));
    }
    let vector = weighted_bundle(weighted.iter().map(|(v, w)| (v, *w)))?;
    Ok(VsrOutput {
        vector,
        entity_count: entities.len(),
    })
}

/// Golden-file export format for encoded scenes.
#[derive(Debug, Serialize, Deserialize)]
pub struct VsrJson {
    pub dim: usize,
    pub mode: String,
    pub vector: Vec<f64>,
}

impl VsrJson {
    pub fn new(output: &VsrOutput, mode: FusionMode) -> Self {
        VsrJson {
            dim: output.vector.dim(),
            mode: mode.as_str().to_string(),
            vector: output.vector.values().to_vec(),
        }
    }
}
