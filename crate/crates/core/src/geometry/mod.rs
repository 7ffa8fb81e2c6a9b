pub mod collar;
pub mod indicial;
pub mod laplacian;
pub mod metric;
pub mod normal_form;

pub use collar::{CollarFamily, CollarMetric};
pub use indicial::{indicial_data, IndicialData};
pub use laplacian::{laplacian_apply, PolarField, PolarGrid};
pub use metric::{dual_metric, ConicMetric, CrossSection, FdOrder, GridPerturbation, Perturbation, TabulatedCircle};
