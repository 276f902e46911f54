//! Exact oracles for tiny instances. The subset chain and the bond
//! enumeration compute the same two-point function by independent routes.

pub mod dp;
pub mod enumerate;

pub use dp::{exact_two_point_dp, exact_two_point_dp_capped, SubsetChain, SubsetState};
pub use enumerate::{
    brute_force_pi_n, brute_force_pi_n_capped, brute_force_two_point,
    brute_force_two_point_capped, BondGraph,
};
