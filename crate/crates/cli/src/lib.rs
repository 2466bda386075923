//! MatrixMarket ingestion, CSV emission, and the command-line harness over
//! the mixed-precision solvers.

pub mod app;
pub mod csv;
pub mod mm;

pub use app::cli_main;
