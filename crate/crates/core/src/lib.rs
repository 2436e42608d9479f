//! Engines for computer-aided optimization of electric-erosion machining.
//!
//! The crate keeps experimental data in a file-backed [`store`], plans
//! full-factorial experiments ([`doe`]), validates and analyses measured data
//! ([`stats`]), fits and ranks empirical models ([`model`]), searches the
//! factor box for optimal processing conditions ([`optimize`]) and prices a
//! job against conventional machining ([`econ`]).

pub mod doe;
pub mod econ;
pub mod error;
pub mod model;
pub mod optimize;
pub mod stats;
pub mod store;

pub use error::{Error, ErrorKind, Result};
