//! Numerics for the discretized spread-out contact process: kernel
//! analysis, Monte Carlo and exact cluster statistics, the lace-expansion
//! recursion, diagram bounds, inductive-method diagnostics and scaling fits.

pub mod analysis;
pub mod diagrams;
pub mod error;
pub mod exact;
pub mod fft;
pub mod field;
pub mod flow;
pub mod induction;
pub mod io;
pub mod kernel;
pub mod lace;
pub mod lattice;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
pub use field::SpaceTimeField;
pub use kernel::{make_uniform_kernel, KernelD};
pub use model::ModelParams;
