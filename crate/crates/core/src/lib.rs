pub mod contact_graph;
pub mod error;
pub mod faces;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod laplace;
pub mod lemmas;
pub mod metrics;
pub mod packing;
pub mod par;
pub mod poly_growth;
pub mod render;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
