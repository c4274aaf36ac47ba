//! Seeded synthetic benchmarks with confounded assignment and closed-form effects.

mod csv_io;
mod dynamic_dgp;
mod static_dgp;

pub use csv_io::{
    dynamic_header, read_dynamic, read_static, sidecar_path, static_header, write_dynamic,
    write_json, write_static,
};
pub use dynamic_dgp::{
    gen_dynamic, spectral_norm, DynamicDgp, DynamicDgpSpec, Trajectory, TrajectoryDataset,
};
pub use static_dgp::{
    gen_nhanes_surrogate, gen_static, StaticDataset, StaticDgp, StaticDgpSpec,
};
