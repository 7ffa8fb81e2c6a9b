pub mod covector;
pub mod deflection;
pub mod develop;
pub mod hamilton;
pub mod integrate;
pub mod relations;
pub mod upsilon;

pub use covector::{EdgeCovector, Endpoint, RaySegment};
pub use deflection::{near_miss_deflection, NearMiss};
pub use hamilton::{hamilton_field, FlowTangent};
pub use integrate::{integrate_flow, model_closed_form, FlowOptions};
pub use relations::{gamma_relation, geometric_continuations, LimitingGeodesic, RadialRay, RayKind, RaySign};
pub use upsilon::upsilon;
