//! Discretized integral operator.
//!
//! Collocation at voxel centroids with pulse basis functions. The volume term
//! uses centroid quadrature (2×2×2 subcells for near pairs) and an
//! equivalent-sphere self cell; the surface-charge term pairs the analytic
//! static field of each facet with Gauss nodes for the retarded correction.

mod operator;
mod rules;
mod time;

pub use operator::{assemble, assemble_with_rules, self_term, volume_kernel_matrix, FactoredOperator, FrequencyOperator};
pub use rules::{collocation_rules, FacetNode, FacetRule, QuadratureOptions, SelfCell, TargetRules, VolumeNode};
pub use time::{apply_l_time, TimeHistory};
pub(crate) use rules::INV_4PI;
pub(crate) use time::{hat, shell_at};
