//! RCPC-coded V-BLAST MIMO toolkit.

pub mod analytic;
pub mod channel;
pub mod convcode;
pub mod error;
pub mod exec;
pub mod mimo;
pub mod modem;
pub mod quad;
pub mod rcpc;
pub mod reference;
pub mod simkit;

pub use error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
