//! Fountain-code budget allocation across scalable video layers for
//! multicast clients with different reception conditions.

// `!(x > 0.0)` style guards are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over matrices and layers read better than zipped iterators here.
#![allow(clippy::needless_range_loop)]

pub mod alloc;
pub mod config;
pub mod error;
pub mod outage;
pub mod population;
pub mod report;
pub mod sim;
pub mod utility;

pub use error::{Error, Result};
