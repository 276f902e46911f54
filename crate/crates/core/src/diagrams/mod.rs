//! Diagram bounds `P^(N)` and `P~^(N;n)` on the expansion coefficients.
//!
//! [`bounds`] evaluates them as dynamic programs over `(cA, cB)` weights;
//! [`graph`] and [`eval`] build the same diagrams symbolically and contract
//! them vertex by vertex, which serves as an independent nested-sum route.

pub mod bounds;
pub mod eval;
pub mod graph;
pub mod grid;

pub use bounds::{
    build_diagram_bounds, construction_sums, line_function_l, DiagramBounds, Ingredients, Line,
    StPoint, Step, TildeBound, Variant,
};
pub use eval::{evaluate, evaluate_sum, EliminationOrder};
pub use graph::{
    apply_construction_b, build_p_graphs, build_tilde_graphs, DiagramGraph, LineFactor, Pin,
    Target,
};
pub use grid::StGrid;
