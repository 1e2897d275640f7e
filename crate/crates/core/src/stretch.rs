//! Key stretching at toy scale: the X-conjugated double query, its glued
//! placement, and the brickwork chain.

use crate::error::{Error, Result};
use crate::glued::{glued_unitary, GluedLayout};
use crate::haar_oracle::{batch_mean, BATCHES};
use crate::linalg::{haar_sample_with, kron, DenseOperator, C64, ZERO};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

/// Nine f-bit keys, each applied as X on the f most significant qubits of
/// its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StretchKeys {
    pub f: u32,
    pub k: [u64; 9],
}

impl StretchKeys {
    pub fn new(f: u32, k: [u64; 9]) -> Result<Self> {
        if f >= 64 || k.iter().any(|&x| x >> f != 0) {
            return Err(Error::Invalid(format!("keys wider than {f} bits")));
        }
        Ok(StretchKeys { f, k })
    }

    pub fn random<R: Rng + ?Sized>(f: u32, rng: &mut R) -> Self {
        let mut k = [0; 9];
        for x in &mut k {
            *x = rng.gen_range(0..1u64 << f);
        }
        StretchKeys { f, k }
    }
}

/// X^k on the f most significant of n qubits, as a permutation matrix.
pub fn prefix_x(k: u64, f: u32, n: u32) -> Result<DenseOperator> {
    if f > n {
        return Err(Error::WidthMismatch { expected: n as usize, got: f as usize });
    }
    let mask = (k as usize) << (n - f);
    let d = 1usize << n;
    let mut m = DMatrix::from_element(d, d, ZERO);
    for i in 0..d {
        m[(i ^ mask, i)] = C64::new(1.0, 0.0);
    }
    Ok(m)
}

/// X^{k₃} U X^{k₂} U X^{k₁} on n qubits.
pub fn xuxux(u: &DenseOperator, k1: u64, k2: u64, k3: u64, f: u32, n: u32) -> Result<DenseOperator> {
    if u.nrows() != 1 << n {
        return Err(Error::DimensionMismatch(u.nrows(), 1 << n));
    }
    Ok(prefix_x(k3, f, n)? * u * prefix_x(k2, f, n)? * u * prefix_x(k1, f, n)?)
}

/// The three keyed blocks glued on AB, BC, AB. Keys k₁..k₃ go to the first
/// block applied, k₇..k₉ to the last.
pub fn stretch_pru(u: &DenseOperator, keys: &StretchKeys, g: &GluedLayout) -> Result<DenseOperator> {
    let w = g.component_width();
    let k = &keys.k;
    let b1 = xuxux(u, k[0], k[1], k[2], keys.f, w)?;
    let b2 = xuxux(u, k[3], k[4], k[5], keys.f, w)?;
    let b3 = xuxux(u, k[6], k[7], k[8], keys.f, w)?;
    glued_unitary(&b1, &b2, &b3, g)
}

fn identity(qubits: u32) -> DenseOperator {
    DMatrix::identity(1 << qubits, 1 << qubits)
}

/// Units U₀, …, U_{2t} on 2h qubits each, placed on half-register pairs
/// (0,1), (1,2), …, (t,t+1), (t−1,t), …, (0,1) of t+2 halves; half 0 is
/// most significant and U₀ acts first.
pub fn brickwork_chain(units: &[DenseOperator], h: u32) -> Result<DenseOperator> {
    if units.len() % 2 == 0 {
        return Err(Error::Invalid(format!("{} units; need an odd count", units.len())));
    }
    let t = (units.len() - 1) / 2;
    let halves = t as u32 + 2;
    let mut out = identity(h * halves);
    for (i, u) in units.iter().enumerate() {
        if u.nrows() != 1 << (2 * h) {
            return Err(Error::DimensionMismatch(u.nrows(), 1 << (2 * h)));
        }
        let p = if i <= t { i } else { 2 * t - i } as u32;
        let placed = kron(&kron(&identity(h * p), u), &identity(h * (halves - p - 2)));
        out = placed * out;
    }
    Ok(out)
}

/// |Tr S|²/d², the probability that S applied to half of a maximally
/// entangled pair leaves it unchanged. Its Haar mean is 1/d².
pub fn trace_statistic(s: &DenseOperator) -> f64 {
    let d = s.nrows() as f64;
    s.trace().norm_sqr() / (d * d)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StretchAdvantage {
    pub f: u32,
    pub mean: f64,
    pub haar: f64,
    pub advantage: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte-Carlo one-query advantage of the stretched construction (one Haar
/// U on the component, fresh random keys per sample) against Haar on the
/// full register.
pub fn stretch_advantage(g: &GluedLayout, f: u32, samples: usize, seed: u64) -> Result<StretchAdvantage> {
    let w = g.component_width();
    if f > w {
        return Err(Error::WidthMismatch { expected: w as usize, got: f as usize });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_sample_with(1 << w, &mut rng)?;
        let keys = StretchKeys::random(f, &mut rng);
        vals.push(trace_statistic(&stretch_pru(&u, &keys, g)?));
    }
    let (mean, stderr) = batch_mean(&vals, BATCHES);
    let d = 2f64.powi((2 * g.n + g.lambda) as i32);
    let haar = 1.0 / (d * d);
    Ok(StretchAdvantage { f, mean, haar, advantage: (mean - haar).abs(), stderr, samples })
}

/// The same statistic with the first `replaced` glued blocks swapped for
/// independent Haar unitaries, one replacement per step of the hybrid chain.
pub fn stretch_hybrid_step(g: &GluedLayout, f: u32, replaced: usize, samples: usize, seed: u64) -> Result<StretchAdvantage> {
    let w = g.component_width();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_sample_with(1 << w, &mut rng)?;
        let keys = StretchKeys::random(f, &mut rng);
        let k = keys.k;
        let mut blocks = Vec::with_capacity(3);
        for b in 0..3 {
            blocks.push(if b < replaced {
                haar_sample_with(1 << w, &mut rng)?
            } else {
                xuxux(&u, k[3 * b], k[3 * b + 1], k[3 * b + 2], f, w)?
            });
        }
        vals.push(trace_statistic(&glued_unitary(&blocks[0], &blocks[1], &blocks[2], g)?));
    }
    let (mean, stderr) = batch_mean(&vals, BATCHES);
    let d = 2f64.powi((2 * g.n + g.lambda) as i32);
    let haar = 1.0 / (d * d);
    Ok(StretchAdvantage { f, mean, haar, advantage: (mean - haar).abs(), stderr, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_sample, unitarity_defect};

    #[test]
    fn xuxux_trivial_cases() {
        let u = haar_sample(8, 1).unwrap();
        assert!((xuxux(&u, 0, 0, 0, 2, 3).unwrap() - &u * &u).norm() < 1e-12);
        let id = identity(3);
        let x = xuxux(&id, 1, 2, 2, 2, 3).unwrap();
        assert!((x - prefix_x(1, 2, 3).unwrap()).norm() < 1e-12);
        let m = xuxux(&u, 3, 1, 2, 2, 3).unwrap();
        assert!(unitarity_defect(&m) < 1e-12);
        assert!(xuxux(&u, 0, 0, 0, 4, 3).is_err());
    }

    #[test]
    fn prefix_x_acts_on_top_bits() {
        let x = prefix_x(1, 1, 3).unwrap();
        assert_eq!(x[(4, 0)], C64::new(1.0, 0.0));
        assert_eq!(x[(0, 4)], C64::new(1.0, 0.0));
    }

    #[test]
    fn stretch_identity_and_unitarity() {
        let g = GluedLayout::new(1, 2, 0).unwrap();
        let keys = StretchKeys::new(2, [0; 9]).unwrap();
        let s = stretch_pru(&identity(3), &keys, &g).unwrap();
        assert!((s - identity(4)).norm() < 1e-12);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let keys = StretchKeys::random(2, &mut rng);
        let s = stretch_pru(&haar_sample(8, 4).unwrap(), &keys, &g).unwrap();
        assert!(unitarity_defect(&s) < 1e-9);
        assert!(StretchKeys::new(2, [4, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn three_unit_chain_is_the_glued_placement() {
        let g = GluedLayout::new(2, 2, 0).unwrap();
        let us: Vec<_> = (0..3).map(|s| haar_sample(16, 10 + s).unwrap()).collect();
        let chain = brickwork_chain(&us, 2).unwrap();
        let glued = glued_unitary(&us[0], &us[1], &us[2], &g).unwrap();
        assert!((chain - glued).norm() < 1e-12);
    }

    #[test]
    fn chain_trivial_cases() {
        let ids = vec![identity(2); 5];
        assert!((brickwork_chain(&ids, 1).unwrap() - identity(4)).norm() < 1e-12);
        assert!(brickwork_chain(&ids[..4], 1).is_err());
        let us: Vec<_> = (0..5).map(|s| haar_sample(4, 30 + s).unwrap()).collect();
        assert!(unitarity_defect(&brickwork_chain(&us, 1).unwrap()) < 1e-9);
    }

    #[test]
    fn trace_statistic_haar_mean() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let vals: Vec<f64> = (0..20_000).map(|_| trace_statistic(&haar_sample_with(4, &mut rng).unwrap())).collect();
        let (m, se) = batch_mean(&vals, BATCHES);
        assert!((m - 1.0 / 16.0).abs() < 4.0 * se, "{m} ± {se}");
    }
}
