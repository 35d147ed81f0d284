//! Monte-Carlo references shared by the integration tests. Deliberately
//! written without the library's samplers.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Mc {
    pub mean: f64,
    pub se: f64,
}

fn summarize(values: impl Iterator<Item = f64>) -> Mc {
    let (mut n, mut s, mut q) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        s += v;
        q += v * v;
    }
    let mean = s / n;
    let var = (q / n - mean * mean) * n / (n - 1.0);
    Mc { mean, se: (var / n).sqrt() }
}

fn level(z: f64, cutoffs: Option<&[f64]>) -> f64 {
    match cutoffs {
        Some(c) => c.iter().filter(|&&t| z > t).count() as f64,
        None => z,
    }
}

fn pair(rng: &mut ChaCha8Rng, r: f64) -> (f64, f64) {
    let a: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(StandardNormal);
    (a, r * a + (1.0 - r * r).sqrt() * e)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Population τᵃ from `draws` independent pairs of observations.
pub fn population_tau(r: f64, cj: Option<&[f64]>, ck: Option<&[f64]>, draws: usize, seed: u64) -> Mc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..draws).map(|_| {
        let (a1, b1) = pair(&mut rng, r);
        let (a2, b2) = pair(&mut rng, r);
        sgn(level(a1, cj) - level(a2, cj)) * sgn(level(b1, ck) - level(b2, ck))
    }))
}

/// τᵇ by direct O(n²) enumeration.
pub fn tau_b_direct(x: &[f64], y: &[f64]) -> f64 {
    let (mut s, mut nx, mut ny) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let dx = sgn(x[i] - x[j]);
            let dy = sgn(y[i] - y[j]);
            s += dx * dy;
            nx += dx.abs();
            ny += dy.abs();
        }
    }
    s / (nx * ny).sqrt()
}

/// Replicate mean of the sample τᵇ of a binary (cutoff `delta`) against a
/// continuous variable. Samples with a constant binary column are redrawn.
pub fn tau_b_mean(r: f64, delta: f64, n: usize, reps: usize, seed: u64) -> Mc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    summarize((0..reps).map(|_| loop {
        let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| {
                let (a, b) = pair(&mut rng, r);
                (level(a, Some(&[delta])), b)
            })
            .unzip();
        if x.iter().any(|&v| v != x[0]) {
            break tau_b_direct(&x, &y);
        }
    }))
}
