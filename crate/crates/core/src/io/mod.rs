//! File formats: LIBSVM models and data (read) and the compact
//! approximate-model format (read and write).

pub mod compact;
pub mod libsvm;

pub use compact::{parse_approx_model, read_approx_model, save_approx_model, write_approx_model};
pub use libsvm::{
    parse_dataset, parse_exact_model, parse_libsvm_model, parse_poly2_model, read_dataset,
    read_exact_model, read_poly2_model,
};
