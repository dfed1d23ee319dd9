//! Deterministic synthetic classifier and dataset for CI-scale runs.
//!
//! Ten class prototypes are balanced ±1 vectors over 784 pixels. Samples
//! are a prototype with a fraction of pixels flipped (a small share of
//! "hard" samples flips half, giving a nonzero fault-free error floor).
//! The network is constructed, not trained: layer 0 holds matched filters
//! for the prototypes plus low-amplitude noise rows, the middle layers
//! amplify around the sigmoid midpoint so class separation survives depth,
//! and the output layer reads one channel per class. Every parameter
//! derives from one seed, so network and dataset agree on the prototypes.

use rand::Rng;

use crate::nn::data::Dataset;
use crate::nn::model::{Layer, LayerSpec, Network};
use crate::nn::quant::QuantFormat;
use crate::seed;

pub const IMAGE_SIDE: u32 = 28;
pub const CLASSES: usize = 10;
/// Hidden widths: 784 → 32 → 32 → 32 → 16 → 10, five weight sets.
pub const HIDDEN: [u32; 4] = [32, 32, 32, 16];

const PROTO_WEIGHT: f64 = 1.0 / 32.0;
const NOISE_WEIGHT: f64 = 1.0 / 64.0;
const GAIN: f64 = 4.0;
const GAIN_BIAS: f64 = -2.0;
const FLIP_PROB: f64 = 0.08;
const HARD_FLIP_PROB: f64 = 0.5;
const HARD_FRACTION: f64 = 0.05;
const PIXEL_HI: u8 = 192;
const PIXEL_LO: u8 = 64;

fn pixels() -> usize {
    (IMAGE_SIDE * IMAGE_SIDE) as usize
}

/// Balanced ±1 vector, shuffled by the given stream.
fn balanced_signs<R: Rng>(n: usize, rng: &mut R) -> Vec<i8> {
    let mut v: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
    v
}

fn prototypes(seed_value: u64) -> Vec<Vec<i8>> {
    (0..CLASSES)
        .map(|c| {
            let mut rng = seed::stream(seed::derive2(seed_value, seed::TAG_DATA, 0, c as u64));
            balanced_signs(pixels(), &mut rng)
        })
        .collect()
}

/// Builds the paired (network, dataset); `samples` should be a multiple of
/// ten for balanced classes.
pub fn scenario(seed_value: u64, samples: usize) -> (Network, Dataset) {
    (network(seed_value), dataset(seed_value, samples))
}

pub fn dataset(seed_value: u64, samples: usize) -> Dataset {
    let protos = prototypes(seed_value);
    let n_pix = pixels();
    let mut images = Vec::with_capacity(samples * n_pix);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % CLASSES;
        let mut rng = seed::stream(seed::derive2(seed_value, seed::TAG_DATA, 1, i as u64));
        let q = if rng.random::<f64>() < HARD_FRACTION { HARD_FLIP_PROB } else { FLIP_PROB };
        for j in 0..n_pix {
            let mut s = protos[class][j];
            if rng.random::<f64>() < q {
                s = -s;
            }
            images.push(if s > 0 { PIXEL_HI } else { PIXEL_LO });
        }
        labels.push(class as u8);
    }
    Dataset::new(IMAGE_SIDE, IMAGE_SIDE, images, labels).expect("synthetic dataset is valid")
}

pub fn network(seed_value: u64) -> Network {
    let protos = prototypes(seed_value);
    let n_pix = pixels() as u32;
    let q15 = QuantFormat::q15();
    let q4_11 = QuantFormat { digit_bits: 4, frac_bits: 11 };

    // Layer 0: matched filters for the ten prototypes, then noise rows.
    let h0 = HIDDEN[0];
    let mut w0 = Vec::with_capacity((h0 * n_pix) as usize);
    for o in 0..h0 as usize {
        if o < CLASSES {
            for j in 0..n_pix as usize {
                w0.push(q15.quantize(PROTO_WEIGHT * protos[o][j] as f64));
            }
        } else {
            let mut rng = seed::stream(seed::derive2(seed_value, seed::TAG_NET, 0, o as u64));
            for s in balanced_signs(n_pix as usize, &mut rng) {
                w0.push(q15.quantize(NOISE_WEIGHT * s as f64));
            }
        }
    }
    let l0 = Layer {
        spec: LayerSpec { index: 0, in_size: n_pix, out_size: h0, format: q15 },
        weights: w0,
        biases: vec![0; h0 as usize],
    };

    let diag_layer = |index: u32, n_in: u32, n_out: u32| -> Layer {
        let mut w = vec![0i16; (n_in * n_out) as usize];
        let mut b = vec![0i16; n_out as usize];
        for o in 0..n_out {
            w[(o * n_in + o) as usize] = q4_11.quantize(GAIN);
            b[o as usize] = q4_11.quantize(GAIN_BIAS);
        }
        Layer {
            spec: LayerSpec { index, in_size: n_in, out_size: n_out, format: q4_11 },
            weights: w,
            biases: b,
        }
    };

    let l1 = diag_layer(1, HIDDEN[0], HIDDEN[1]);
    let l2 = diag_layer(2, HIDDEN[1], HIDDEN[2]);

    // Layer 3 narrows to 16: class channels keep the amplifying diagonal,
    // the spare channels tap noise channels so faults there can matter.
    let mut l3 = diag_layer(3, HIDDEN[2], HIDDEN[3]);
    for r in CLASSES as u32..HIDDEN[3] {
        let tap = 16 + (r - CLASSES as u32);
        l3.weights[(r * HIDDEN[2] + tap) as usize] = q4_11.quantize(1.0);
        l3.biases[r as usize] = q4_11.quantize(-0.5);
    }

    // Output layer: one channel per class; spare inputs carry zero weight.
    let l4 = diag_layer(4, HIDDEN[3], CLASSES as u32);

    Network::new(vec![l0, l1, l2, l3, l4]).expect("synthetic network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_is_deterministic() {
        let (n1, d1) = scenario(3, 50);
        let (n2, d2) = scenario(3, 50);
        assert_eq!(n1, n2);
        assert_eq!(d1, d2);
        let (n3, _) = scenario(4, 50);
        assert_ne!(n1, n3);
    }

    #[test]
    fn shapes_and_block_counts() {
        let net = network(1);
        let sizes: Vec<(u32, u32)> =
            net.layers.iter().map(|l| (l.spec.in_size, l.spec.out_size)).collect();
        assert_eq!(sizes, vec![(784, 32), (32, 32), (32, 32), (32, 16), (16, 10)]);
        assert_eq!(net.total_blocks(), 29);
    }

    #[test]
    fn prototypes_are_balanced() {
        for p in prototypes(9) {
            assert_eq!(p.iter().map(|s| *s as i32).sum::<i32>(), 0);
            assert_eq!(p.len(), 784);
        }
    }

    #[test]
    fn dataset_is_balanced_and_in_range() {
        let d = dataset(5, 120);
        assert_eq!(d.len(), 120);
        for c in 0..10u8 {
            assert_eq!(d.labels.iter().filter(|l| **l == c).count(), 12);
        }
        assert!(d.images.iter().all(|p| *p == PIXEL_HI || *p == PIXEL_LO));
    }

    #[test]
    fn matched_filter_rows_follow_prototypes() {
        let net = network(7);
        let protos = prototypes(7);
        let l0 = &net.layers[0];
        for (j, s) in protos[3].iter().enumerate() {
            let w = l0.weight(3, j as u32);
            assert_eq!(w.signum() as i8, *s);
            assert_eq!(w.abs(), 1024);
        }
    }
}
