pub mod affine;
pub mod error;
pub mod model;
pub mod poly;
pub mod relaxation;
pub mod conic;
pub mod certify;
pub mod cli;
pub mod dsl;
