// `!(a < b)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cmono;
pub mod linalg;
pub mod polysys;
pub mod regionmap;
pub mod rms;
pub mod solver;
pub mod tracker;
