//! The partial fibration over the top and vertex regions of the boundary
//! of the moment simplex: regions, fibre records, overlaps, the amoeba of
//! the singular set, monodromy and elliptic periods.

pub mod amoeba;
pub mod fibre;
pub mod monodromy;
pub mod overlap;
pub mod periods;
pub mod region;

pub use amoeba::{amoeba, amoeba_clusters, AmoebaPoint};
pub use fibre::{
    build_top_fibration, build_vertex_fibration, default_grid_size, end_check, fibre_problem, record_torus,
    solve_fibre, AtlasConfig, EndCheck, FibreKind, FibreRecord, MetricChoice,
};
pub use monodromy::{
    base_circle_loop, edge_loop, face_segment, measured_windings, monodromy, monodromy_combinatorial,
    predicted_windings, transition, vertex_segment, FibreWindings, LoopPoint, MonodromyMethod, MonodromyResult,
};
pub use overlap::{log_radius_profile, reconcile_overlap, record_distance, MatchReport};
pub use periods::{elliptic_periods, EllipticPeriods};
pub use region::{classify_region, t_hat, BasePoint, RegionConstants, RegionTag};
