//! Integer inference and fault-injection measurement.
//!
//! Activations use the fraction-only 16-bit format. A layer with weight
//! format Q(1,d,f) accumulates w·a products carrying f+15 fraction bits in
//! 64-bit registers (worst case 16+16+10 = 42 significant bits for a
//! 1024-wide dot product), adds the bias aligned to the same scale, then
//! squashes through an interpolated sigmoid table. The final layer skips
//! the sigmoid: argmax over raw accumulators decides the class, lowest
//! index on ties.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::Result;
use crate::fvm::{FaultMask, FaultVariationMap};
use crate::nn::data::Dataset;
use crate::nn::map::StoredImage;
use crate::nn::model::{LayerSpec, Network};
use crate::seed;

const LUT_INTERVALS: usize = 1024;
/// Sigmoid table domain: [-8, 8) covers the useful range; outside it the
/// function is flat to 16-bit precision.
const LUT_HALF_DOMAIN: i64 = 8;

fn sigmoid_lut() -> &'static [i16; LUT_INTERVALS + 1] {
    static LUT: OnceLock<[i16; LUT_INTERVALS + 1]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut t = [0i16; LUT_INTERVALS + 1];
        for (i, v) in t.iter_mut().enumerate() {
            let x = -(LUT_HALF_DOMAIN as f64)
                + i as f64 * (2.0 * LUT_HALF_DOMAIN as f64 / LUT_INTERVALS as f64);
            let s = 1.0 / (1.0 + (-x).exp());
            *v = ((s * 32768.0).round() as i32).min(i16::MAX as i32) as i16;
        }
        t
    })
}

/// σ(acc · 2^-frac_bits) in the fraction-only format, linearly
/// interpolated between table knots. `frac_bits` must be at least 10.
pub fn sigmoid_q15(acc: i64, frac_bits: u32) -> i16 {
    debug_assert!(frac_bits >= 10);
    let lut = sigmoid_lut();
    let lo = -(LUT_HALF_DOMAIN << frac_bits);
    let span = 2 * LUT_HALF_DOMAIN << frac_bits;
    let t = (acc - lo).clamp(0, span - 1);
    let step_bits = frac_bits + 4 - 10;
    let idx = (t >> step_bits) as usize;
    let rem = t - ((idx as i64) << step_bits);
    let a = lut[idx] as i64;
    let b = lut[idx + 1] as i64;
    (a + (((b - a) * rem) >> step_bits)) as i16
}

fn layer_accs(spec: &LayerSpec, weights: &[i16], biases: &[i16], acts: &[i16]) -> Vec<i64> {
    let n_in = spec.in_size as usize;
    (0..spec.out_size as usize)
        .map(|o| {
            let row = &weights[o * n_in..(o + 1) * n_in];
            let mut acc = (biases[o] as i64) << 15;
            for (w, a) in row.iter().zip(acts.iter()) {
                acc += *w as i64 * *a as i64;
            }
            acc
        })
        .collect()
}

fn argmax(accs: &[i64]) -> usize {
    let mut best = 0;
    for (i, v) in accs.iter().enumerate().skip(1) {
        if *v > accs[best] {
            best = i;
        }
    }
    best
}

/// Classifies one input given explicit per-layer weights (the faulty-read
/// path); `biases` come from the network and never fault.
pub fn classify_with(
    specs: &[LayerSpec],
    weights: &[Vec<i16>],
    biases: &[Vec<i16>],
    input: &[i16],
) -> usize {
    let mut acts: Vec<i16> = input.to_vec();
    for (j, spec) in specs.iter().enumerate() {
        let accs = layer_accs(spec, &weights[j], &biases[j], &acts);
        if j + 1 == specs.len() {
            return argmax(&accs);
        }
        let s = spec.format.frac_bits + 15;
        acts = accs.iter().map(|acc| sigmoid_q15(*acc, s)).collect();
    }
    unreachable!("network has at least one layer")
}

/// Clean-weight classification of one input.
pub fn infer_clean(network: &Network, input: &[i16]) -> usize {
    let specs = network.specs();
    let weights: Vec<Vec<i16>> = network.layers.iter().map(|l| l.weights.clone()).collect();
    let biases: Vec<Vec<i16>> = network.layers.iter().map(|l| l.biases.clone()).collect();
    classify_with(&specs, &weights, &biases, input)
}

/// Classification of one input with weights read through a fault mask.
pub fn infer(
    network: &Network,
    stored: &StoredImage,
    mask: &FaultMask,
    ecc_on: bool,
    input: &[i16],
) -> usize {
    let weights = stored.read_weights(mask, ecc_on);
    let biases: Vec<Vec<i16>> = network.layers.iter().map(|l| l.biases.clone()).collect();
    classify_with(&network.specs(), &weights, &biases, input)
}

/// Misclassified fraction of the dataset, percent, given explicit weights.
pub fn error_pct_with(
    specs: &[LayerSpec],
    weights: &[Vec<i16>],
    biases: &[Vec<i16>],
    dataset: &Dataset,
) -> f64 {
    let wrong: usize = (0..dataset.len())
        .into_par_iter()
        .map(|i| {
            let pred = classify_with(specs, weights, biases, &dataset.activations(i));
            (pred != dataset.labels[i] as usize) as usize
        })
        .sum();
    wrong as f64 / dataset.len() as f64 * 100.0
}

/// Fault-free classification error of the network on the dataset, percent.
pub fn clean_error_pct(network: &Network, dataset: &Dataset) -> f64 {
    let weights: Vec<Vec<i16>> = network.layers.iter().map(|l| l.weights.clone()).collect();
    let biases: Vec<Vec<i16>> = network.layers.iter().map(|l| l.biases.clone()).collect();
    error_pct_with(&network.specs(), &weights, &biases, dataset)
}

/// Error under one specific mask.
pub fn error_with_mask(
    network: &Network,
    stored: &StoredImage,
    mask: &FaultMask,
    ecc_on: bool,
    dataset: &Dataset,
) -> f64 {
    let weights = stored.read_weights(mask, ecc_on);
    let biases: Vec<Vec<i16>> = network.layers.iter().map(|l| l.biases.clone()).collect();
    error_pct_with(&network.specs(), &weights, &biases, dataset)
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub voltage_mv: u32,
    pub ecc: bool,
    /// Error percent per run, run order.
    pub per_run: Vec<f64>,
    pub median_error_pct: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Classification error at one voltage: realizes one mask per run and
/// reports per-run errors plus their median. Run seeds derive from
/// `base_seed` and the run index, matching the sweep drivers.
pub fn evaluate(
    network: &Network,
    stored: &StoredImage,
    dataset: &Dataset,
    fvm: &FaultVariationMap,
    voltage_mv: u32,
    temp_c: f64,
    ecc_on: bool,
    runs: u32,
    base_seed: u64,
) -> Result<EvalReport> {
    let mut per_run = Vec::with_capacity(runs as usize);
    for run in 0..runs {
        let run_seed = seed::derive(base_seed, seed::TAG_RUN, run as u64);
        let mask = fvm.realize(voltage_mv, temp_c, run_seed)?;
        per_run.push(error_with_mask(network, stored, &mask, ecc_on, dataset));
    }
    Ok(EvalReport {
        voltage_mv,
        ecc: ecc_on,
        median_error_pct: median(&per_run),
        per_run,
    })
}

/// Per-layer normalized vulnerability from a stuck-at-0 injection
/// campaign: `injections` single-bit flips into stored '1' bits of each
/// layer, mean error increase, normalized by the smallest layer's
/// increase. Zero injections returns all ones by convention; layers whose
/// mean increase is not positive report 0.
pub fn layer_vulnerability(
    network: &Network,
    dataset: &Dataset,
    injections: u32,
    seed_value: u64,
) -> Vec<f64> {
    let n_layers = network.layers.len();
    if injections == 0 {
        return vec![1.0; n_layers];
    }
    let specs = network.specs();
    let biases: Vec<Vec<i16>> = network.layers.iter().map(|l| l.biases.clone()).collect();
    let mut weights: Vec<Vec<i16>> =
        network.layers.iter().map(|l| l.weights.clone()).collect();
    let baseline = error_pct_with(&specs, &weights, &biases, dataset);

    let mut raw = Vec::with_capacity(n_layers);
    for j in 0..n_layers {
        let one_bits: Vec<(usize, u32)> = weights[j]
            .iter()
            .enumerate()
            .flat_map(|(w, bits)| {
                let bits = *bits as u16;
                (0..16).filter(move |b| (bits >> b) & 1 == 1).map(move |b| (w, b))
            })
            .collect();
        if one_bits.is_empty() {
            raw.push(0.0);
            continue;
        }
        let mut rng = seed::stream(seed::derive2(seed_value, seed::TAG_INJECT, j as u64, 0));
        let mut total = 0.0;
        for _ in 0..injections {
            let (w, b) = one_bits[rand::Rng::random_range(&mut rng, 0..one_bits.len())];
            let original = weights[j][w];
            weights[j][w] = (original as u16 & !(1u16 << b)) as i16;
            total += error_pct_with(&specs, &weights, &biases, dataset) - baseline;
            weights[j][w] = original;
        }
        raw.push(total / injections as f64);
    }

    let floor = raw.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return vec![1.0; n_layers];
    }
    raw.iter().map(|v| if *v > 0.0 { v / floor } else { 0.0 }).collect()
}
