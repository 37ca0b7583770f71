//! Catalog of concrete base operators with exact trace data, closed-form
//! Q-matrices where an analytic formula exists, and exact combinatorial
//! predicates used to cross-check the numerical engine.

pub mod eval;
pub mod interval;
pub mod rank_one;
pub mod render;
pub mod seba;
pub mod star;

pub use eval::{eigenfunction_eval, SamplePoint};
pub use interval::build_interval;
pub use rank_one::build_rank_one;
pub use render::boundary_conditions_render;
pub use seba::{build_seba, seba_common_spectrum_exact, Coordinate, SideRatio};
pub use star::build_star_graph;
