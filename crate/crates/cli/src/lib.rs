//! Command-line and HTTP front ends for the EDM workbench.
//!
//! [`workbench`] holds the operations and their request/response types,
//! [`cli`] and [`service`] expose them, and [`render`] turns responses into
//! fixed-width text.

pub mod cli;
pub mod render;
pub mod service;
pub mod workbench;

pub use workbench::Workbench;
