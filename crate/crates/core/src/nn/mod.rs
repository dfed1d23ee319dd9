//! Fixed-point fully-connected classifier whose weights live in simulated
//! BRAM tiles.
//!
//! The pipeline: quantize weights per layer ([`quant`]), pack them one
//! 16-bit word per BRAM row ([`map`]) under a placement assignment, read
//! them back through a realized fault mask (optionally through SECDED),
//! and run integer inference ([`infer`]) to measure classification error.
//! [`synthetic`] ships a deterministic network/dataset pair so the whole
//! path is testable without trained artifacts.

pub mod data;
pub mod infer;
pub mod map;
pub mod model;
pub mod quant;
pub mod synthetic;

pub use data::Dataset;
pub use infer::{evaluate, infer, layer_vulnerability, EvalReport};
pub use map::StoredImage;
pub use model::{Layer, LayerSpec, Network};
pub use quant::QuantFormat;
