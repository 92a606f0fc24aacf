//! Semantic-map data model and synthetic scene construction.
//!
//! A map stores, per pixel, the arg-max class and that class's probability;
//! the residual `1 - p` is spread uniformly over the remaining classes. Every
//! map this crate constructs (painted rectangles, schematic renders) has that
//! form, so the compact layout represents the full per-pixel distribution
//! exactly while keeping a 28x224x224 tensor cheap to build per frame.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("class {class:?} is not in the map's class list")]
    UnknownClass { class: String },
    #[error("shape {index} rectangle {rect:?} exceeds the {height}x{width} map")]
    RectOutOfBounds {
        index: usize,
        rect: [usize; 4],
        height: usize,
        width: usize,
    },
    #[error("confidence {confidence} outside (1/{classes}, 1]: painted class must stay the arg-max")]
    InvalidConfidence { confidence: f64, classes: usize },
    #[error("entity mask is empty")]
    EmptyMask,
    #[error("map must have at least 2 classes and nonzero dimensions")]
    DegenerateMap,
}

/// Connectivity used when splitting a class layer into entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

pub const DEFAULT_MAP_SIZE: usize = 224;
pub const DEFAULT_CLASS_COUNT: usize = 28;

/// The six classes the encoder and extractor care about, plus background,
/// padded to 28 entries to honor the channel layout.
pub fn default_classes() -> Vec<String> {
    let mut classes = vec![
        "road".to_string(),
        "sidewalk".to_string(),
        "crosswalk".to_string(),
        "pedestrian".to_string(),
        "vehicle".to_string(),
        "truck".to_string(),
        "background".to_string(),
    ];
    for i in classes.len()..DEFAULT_CLASS_COUNT {
        classes.push(format!("unused{i:02}"));
    }
    classes
}

/// Per-pixel class-probability grid.
#[derive(Debug, Clone)]
pub struct SemanticMap {
    height: usize,
    width: usize,
    classes: Vec<String>,
    class_idx: Vec<u8>,
    conf: Vec<f64>,
}

impl SemanticMap {
    /// A map filled with `background_class` at probability 1.
    pub fn filled(
        height: usize,
        width: usize,
        classes: Vec<String>,
        background_class: &str,
    ) -> Result<Self, SceneError> {
        if height == 0 || width == 0 || classes.len() < 2 || classes.len() > u8::MAX as usize {
            return Err(SceneError::DegenerateMap);
        }
        let bg = class_position(&classes, background_class)?;
        Ok(SemanticMap {
            height,
            width,
            classes,
            class_idx: vec![bg as u8; height * width],
            conf: vec![1.0f64; height * width],
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Arg-max class index at a pixel.
    #[inline]
    pub fn argmax_at(&self, row: usize, col: usize) -> usize {
        self.class_idx[self.at(row, col)] as usize
    }

    /// Probability of the arg-max class at a pixel.
    #[inline]
    pub fn confidence_at(&self, row: usize, col: usize) -> f64 {
        self.conf[self.at(row, col)]
    }

    /// Probability of an arbitrary class at a pixel under the
    /// uniform-residual model.
    pub fn prob_at(&self, class: usize, row: usize, col: usize) -> f64 {
        let i = self.at(row, col);
        let c = self.conf[i];
        if self.class_idx[i] as usize == class {
            c
        } else {
            (1.0 - c) / (self.classes.len() - 1) as f64
        }
    }

    /// Overwrites one pixel with `(class, confidence)`. Confidence must keep
    /// the painted class the arg-max.
    pub fn paint_pixel(
        &mut self,
        row: usize,
        col: usize,
        class: usize,
        confidence: f64,
    ) -> Result<(), SceneError> {
        let k = self.classes.len();
        if confidence <= 1.0 / k as f64 || confidence > 1.0 {
            return Err(SceneError::InvalidConfidence { confidence, classes: k });
        }
        let i = self.at(row, col);
        self.class_idx[i] = class as u8;
        self.conf[i] = confidence;
        Ok(())
    }

    /// Materializes the dense `classes x height x width` tensor, row-major.
    pub fn to_dense(&self) -> Vec<f32> {
        let k = self.classes.len();
        let mut out = vec![0.0f32; k * self.height * self.width];
        let plane = self.height * self.width;
        for (i, (&cls, &c)) in self.class_idx.iter().zip(&self.conf).enumerate() {
            let residual = ((1.0 - c) / (k - 1) as f64) as f32;
            for ch in 0..k {
                out[ch * plane + i] = if ch == cls as usize { c as f32 } else { residual };
            }
        }
        out
    }

    /// Writes a one-line JSON header followed by the dense tensor as
    /// little-endian f32 bytes. Golden-file format for cross-tool checks.
    pub fn export_dense<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        let header = serde_json::json!({
            "height": self.height,
            "width": self.width,
            "classes": self.classes,
            "dtype": "f32le",
            "layout": "class_row_col",
        });
        writeln!(writer, "{header}")?;
        for value in self.to_dense() {
            writer.write_all(&value.to_le_bytes())?;
        }
        Ok(())
    }
}

fn class_position(classes: &[String], name: &str) -> Result<usize, SceneError> {
    classes
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| SceneError::UnknownClass { class: name.to_string() })
}

/// One painted rectangle of a synthetic scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub class: String,
    /// `[row, col, height, width]` in pixels.
    pub rect: [usize; 4],
    pub confidence: f64,
}

/// Synthetic scene: painter's-order rectangles over a background class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "default_size")]
    pub height: usize,
    #[serde(default = "default_size")]
    pub width: usize,
    pub background: String,
    #[serde(default)]
    pub shapes: Vec<ShapeSpec>,
    /// Class list override; defaults to the 28-entry standard list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
}

fn default_size() -> usize {
    DEFAULT_MAP_SIZE
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }
}

/// Paints a spec into a map. Each shape's pixels get probability `c` on its
/// class with the residual spread uniformly over the rest; later shapes
/// overwrite earlier ones.
pub fn build_semantic_map(spec: &SceneSpec) -> Result<SemanticMap, SceneError> {
    let classes = spec.classes.clone().unwrap_or_else(default_classes);
    let mut map = SemanticMap::filled(spec.height, spec.width, classes, &spec.background)?;
    for (index, shape) in spec.shapes.iter().enumerate() {
        let class = class_position(&map.classes, &shape.class)?;
        let [r, c, h, w] = shape.rect;
        if r + h > map.height || c + w > map.width || h == 0 || w == 0 {
            return Err(SceneError::RectOutOfBounds {
                index,
                rect: shape.rect,
                height: map.height,
                width: map.width,
            });
        }
        let k = map.classes.len();
        if shape.confidence <= 1.0 / k as f64 || shape.confidence > 1.0 {
            return Err(SceneError::InvalidConfidence {
                confidence: shape.confidence,
                classes: k,
            });
        }
        for row in r..r + h {
            for col in c..c + w {
                let i = map.at(row, col);
                map.class_idx[i] = class as u8;
                map.conf[i] = shape.confidence;
            }
        }
    }
    Ok(map)
}

/// Bounding box in pixel coordinates, inclusive on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.max_col - self.min_col + 1
    }

    pub fn height(&self) -> usize {
        self.max_row - self.min_row + 1
    }
}

/// A connected cluster of same-class pixels.
#[derive(Debug, Clone)]
pub struct Entity {
    pub id: usize,
    pub class_name: String,
    /// Row-major sorted pixel coordinates.
    pub mask: Vec<(u16, u16)>,
    pub bbox: BBox,
    /// `(row, col)` mean of the mask.
    pub centroid: (f64, f64),
}

impl Entity {
    pub fn pixel_count(&self) -> usize {
        self.mask.len()
    }
}

/// Connected components (default 4-connectivity) of the arg-max layer of one
/// class, ordered by `(min_row, min_col)`.
pub fn label_entities(map: &SemanticMap, class_name: &str) -> Result<Vec<Entity>, SceneError> {
    label_entities_with(map, class_name, Connectivity::Four)
}

pub fn label_entities_with(
    map: &SemanticMap,
    class_name: &str,
    connectivity: Connectivity,
) -> Result<Vec<Entity>, SceneError> {
    let class = class_position(&map.classes, class_name)? as u8;
    let h = map.height;
    let w = map.width;
    let mut visited = vec![false; h * w];
    let mut raw: Vec<Entity> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            if visited[i] || map.class_idx[i] != class {
                continue;
            }
            visited[i] = true;
            stack.push((row, col));
            let mut mask: Vec<(u16, u16)> = Vec::new();
            let (mut min_r, mut min_c, mut max_r, mut max_c) = (row, col, row, col);
            let (mut sum_r, mut sum_c) = (0f64, 0f64);
            while let Some((r, c)) = stack.pop() {
                mask.push((r as u16, c as u16));
                sum_r += r as f64;
                sum_c += c as f64;
                min_r = min_r.min(r);
                min_c = min_c.min(c);
                max_r = max_r.max(r);
                max_c = max_c.max(c);
                let mut push = |nr: usize, nc: usize| {
                    let ni = nr * w + nc;
                    if !visited[ni] && map.class_idx[ni] == class {
                        visited[ni] = true;
                        stack.push((nr, nc));
                    }
                };
                if r > 0 {
                    push(r - 1, c);
                }
                if r + 1 < h {
                    push(r + 1, c);
                }
                if c > 0 {
                    push(r, c - 1);
                }
                if c + 1 < w {
                    push(r, c + 1);
                }
                if connectivity == Connectivity::Eight {
                    if r > 0 && c > 0 {
                        push(r - 1, c - 1);
                    }
                    if r > 0 && c + 1 < w {
                        push(r - 1, c + 1);
                    }
                    if r + 1 < h && c > 0 {
                        push(r + 1, c - 1);
                    }
                    if r + 1 < h && c + 1 < w {
                        push(r + 1, c + 1);
                    }
                }
            }
            let n = mask.len() as f64;
            mask.sort_unstable();
            raw.push(Entity {
                id: 0,
                class_name: class_name.to_string(),
                mask,
                bbox: BBox {
                    min_row: min_r,
                    min_col: min_c,
                    max_row: max_r,
                    max_col: max_c,
                },
                centroid: (sum_r / n, sum_c / n),
            });
        }
    }

    raw.sort_by_key(|e| (e.bbox.min_row, e.bbox.min_col));
    for (id, e) in raw.iter_mut().enumerate() {
        e.id = id;
    }
    Ok(raw)
}

/// Mean arg-max probability over the entity's mask (its class confidence).
pub fn entity_confidence(map: &SemanticMap, entity: &Entity) -> Result<f64, SceneError> {
    if entity.mask.is_empty() {
        return Err(SceneError::EmptyMask);
    }
    let sum: f64 = entity
        .mask
        .iter()
        .map(|&(r, c)| map.confidence_at(r as usize, c as usize))
        .sum();
    Ok(sum / entity.mask.len() as f64)
}
