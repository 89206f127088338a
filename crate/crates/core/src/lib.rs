#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cluster;
pub mod config;
pub mod csa;
pub mod driver;
pub mod error;
pub mod evolution;
pub mod gen;
pub mod init;
pub mod io;
pub mod legalize;
pub mod model;
pub mod objective;
pub mod pipeline;

pub use error::{Error, Result};
