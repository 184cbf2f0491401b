pub mod cip;
pub mod phi;
pub mod rules;

pub use cip::{
    contraction_inner_product, expected_t2_squared, expected_t2q2k_squared_bound, QuadratureSpec,
    ORACLE_MAX_N,
};
