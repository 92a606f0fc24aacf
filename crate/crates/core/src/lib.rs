//! Neuro-symbolic scene encoding and reward shaping.
//!
//! The crate encodes semantic-segmentation scenes into a single Vector
//! Semantic Representation hypervector using Holographic Reduced
//! Representations, extracts uncertainty-bounded predicates from the scene,
//! propagates their bounds through a Horn-clause rule base, and turns the
//! resulting rule confidences into a soft reward signal. A deterministic
//! occluded-pedestrian-crossing simulator closes the loop for evaluation.

pub mod hdc;
pub mod predicates;
pub mod reward;
pub mod scene;
pub mod sfol;
pub mod sim;
pub mod vsr;

pub use hdc::{Codebook, HdcError, Hypervector};
pub use predicates::{CameraModel, Fact};
pub use scene::{Entity, SceneSpec, SemanticMap};
pub use reward::RewardParams;
pub use sfol::{GroundHead, Rule, RuleTag};
pub use sim::{ControllerKind, Density, OcclusionLevel, ScenarioConfig, Variant};
pub use vsr::{FusionMode, SfProvider, StubSfProvider, VsrConfig};
