//! Geometry-aware channel generators.

mod correlation;
mod dump;
mod estimation;
mod geometry;
mod models;

pub use correlation::{apply_kronecker, exp_corr_matrix, mu_from_rho, Kronecker};
pub use dump::{read_dump, write_dump, ChannelDump};
pub use estimation::add_estimation_error;
pub use geometry::{build_geometry, distance, ArrayKind, Geometry, GeometryConfig, Point, SPEED_OF_LIGHT};
pub use models::{
    gen_iid_rayleigh, gen_model2, gen_model3, gen_model4, normalize_per_user, ChannelGenerator, ChannelModel,
    ChannelRealization, Model4Params, PropagationParams, RicianK,
};
