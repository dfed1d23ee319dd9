//! Desk-scale simulator for SRAM-based FPGA block-RAM behaviour under
//! aggressive core-voltage scaling, plus the mitigation toolkit built on it.
//!
//! The crate models a chip as a population of 1024x16 BRAM tiles whose cells
//! start to fail below a guardband voltage. A synthesized fault-variation map
//! assigns every vulnerable cell an onset voltage; deterministic realization
//! turns that map into per-run fault masks which can be replayed against
//! stored data, SECDED-protected words, or a fixed-point neural network whose
//! weights live in the simulated BRAMs. On top of that sit the measurement
//! drivers (voltage sweeps, stability and pattern studies, ECC coverage),
//! the BRAM power model, vulnerability clustering, and the intelligently
//! constrained BRAM placement (ICBP) optimizer with its constraint emitter.
//!
//! Everything is reproducible: all randomness flows from explicit seeds
//! through splittable streams, so a run is byte-identical across thread
//! counts and across machines.

pub mod bram;
pub mod cli;
pub mod error;
pub mod fvm;
pub mod kmeans;
pub mod nn;
pub mod placement;
pub mod power;
pub mod profile;
pub mod report;
pub mod secded;
pub mod seed;
pub mod sweep;

pub use error::{Error, Result};
