//! Exact and certified computations for L_n − 2^x·3^y = c.

pub mod bigreal;
pub mod bounds;
pub mod padic;
pub mod pipeline;
pub mod quadring;
pub mod reduction;
pub mod search;
