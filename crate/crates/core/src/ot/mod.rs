//! Entropy-regularized optimal transport between beat populations and the
//! transport-based minority-class augmentation built on it.

mod augment;
mod barycentric;
mod exact;
mod measure;
mod sinkhorn;

pub use augment::{
    augment_class, plan_augmentation, AugmentConfig, AugmentReport, AugmentTask, SyntheticBeat,
};
pub use barycentric::{barycentric_map, MappedPoints};
pub use exact::{exact_ot_small, EXACT_MAX_POINTS};
pub use measure::{cost_matrix, CostMatrix, EmpiricalMeasure};
pub use sinkhorn::{sinkhorn, SinkhornConfig, TransportPlan};
