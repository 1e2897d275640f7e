//! Ground truth for Haar averages: exact moment operators from permutation
//! operators, Monte-Carlo twirls, adversary circuits run against dense or
//! purified oracles, and the seven hybrid outputs.

use crate::error::{Error, Result};
use crate::glued::{glued_unitary, GluedLayout, GluedOps, Variant};
use crate::linalg::{haar_sample_with, kron, unitarity_defect, DenseOperator, DenseState, DensityMatrix, C64, ONE, ZERO};
use crate::path_recording::{apply_v, apply_v_dag, apply_w_mid, apply_w_mid_dag, Arity, DbKey, PurifiedState, Saturation, SystemLayout};
use crate::simulator::Direction;
use crate::structure::project_good;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

/// P_d(σ) on (C^d)^{⊗t}: P(σ)|i₁…i_t⟩ = |i_{σ⁻¹(1)} … i_{σ⁻¹(t)}⟩, so that
/// P(σ)P(τ) = P(στ). The first tensor factor is most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationOperator {
    pub t: usize,
    pub d: usize,
    pub perm: Vec<usize>,
}

impl PermutationOperator {
    pub fn new(d: usize, perm: Vec<usize>) -> Result<Self> {
        let t = perm.len();
        let mut seen = vec![false; t];
        for &p in &perm {
            if p >= t || seen[p] {
                return Err(Error::Invalid(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(PermutationOperator { t, d, perm })
    }

    /// στ as maps: (στ)(k) = σ(τ(k)).
    pub fn compose(&self, other: &PermutationOperator) -> Result<PermutationOperator> {
        if self.t != other.t || self.d != other.d {
            return Err(Error::DimensionMismatch(self.t, other.t));
        }
        PermutationOperator::new(self.d, other.perm.iter().map(|&k| self.perm[k]).collect())
    }

    pub fn inverse(&self) -> PermutationOperator {
        let mut inv = vec![0; self.t];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p] = k;
        }
        PermutationOperator { t: self.t, d: self.d, perm: inv }
    }

    pub fn cycles(&self) -> usize {
        let mut seen = vec![false; self.t];
        let mut c = 0;
        for s in 0..self.t {
            if seen[s] {
                continue;
            }
            c += 1;
            let mut k = s;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
            }
        }
        c
    }

    fn digits(&self, mut i: usize) -> Vec<usize> {
        let mut v = vec![0; self.t];
        for k in (0..self.t).rev() {
            v[k] = i % self.d;
            i /= self.d;
        }
        v
    }

    pub fn matrix(&self) -> DenseOperator {
        let dim = self.d.pow(self.t as u32);
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        let inv = self.inverse();
        for i in 0..dim {
            let di = self.digits(i);
            let j = (0..self.t).fold(0, |acc, k| acc * self.d + di[inv.perm[k]]);
            m[(j, i)] = ONE;
        }
        m
    }
}

/// All permutations of 0..t in lexicographic order, identity first.
pub fn permutations(t: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            go(prefix, left, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..t).collect(), &mut out);
    out
}

/// Pseudo-inverse of the Gram matrix [Tr P(σ)†P(τ)] = [d^{#cycles(σ⁻¹τ)}],
/// indexed like [`permutations`].
pub fn weingarten_matrix(t: usize, d: usize) -> Result<DMatrix<f64>> {
    if t == 0 || t > 3 {
        return Err(Error::Unsupported);
    }
    let ps: Vec<PermutationOperator> =
        permutations(t).into_iter().map(|p| PermutationOperator::new(d, p)).collect::<Result<_>>()?;
    let k = ps.len();
    let gram = DMatrix::from_fn(k, k, |a, b| (d as f64).powi(ps[a].inverse().compose(&ps[b]).unwrap().cycles() as i32));
    gram.pseudo_inverse(1e-12).map_err(|e| Error::Invalid(e.to_string()))
}

/// E_U U^{⊗t} X U^{†⊗t}, the Hilbert–Schmidt projection of X onto the span
/// of the permutation operators.
pub fn weingarten_twirl(t: usize, d: usize, x: &DenseOperator) -> Result<DenseOperator> {
    let dim = d.pow(t as u32);
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::DimensionMismatch(x.nrows(), dim));
    }
    let wg = weingarten_matrix(t, d)?;
    let mats: Vec<DenseOperator> =
        permutations(t).into_iter().map(|p| PermutationOperator::new(d, p).map(|p| p.matrix())).collect::<Result<_>>()?;
    let coeffs: Vec<C64> = mats.iter().map(|p| (p.adjoint() * x).trace()).collect();
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for (b, pb) in mats.iter().enumerate() {
        let c: C64 = (0..mats.len()).map(|a| coeffs[a] * wg[(a, b)]).sum();
        out += pb * c;
    }
    Ok(out)
}

/// Mean and standard error from `batches` equal batch means.
pub fn batch_mean(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let per = n / batches;
    if per == 0 || batches < 2 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = (0..batches).map(|b| values[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

pub const BATCHES: usize = 20;

/// Entry-wise Monte-Carlo twirl with batch standard errors (real and
/// imaginary parts separately).
#[derive(Clone, Debug)]
pub struct McTwirl {
    pub mean: DenseOperator,
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
}

pub fn mc_twirl(t: usize, d: usize, x: &DenseOperator, samples: usize, seed: u64) -> Result<McTwirl> {
    let dim = d.pow(t as u32);
    if x.nrows() != dim {
        return Err(Error::DimensionMismatch(x.nrows(), dim));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let per = samples / BATCHES;
    let mut batch_means = Vec::with_capacity(BATCHES);
    for _ in 0..BATCHES {
        let mut acc = DMatrix::from_element(dim, dim, ZERO);
        for _ in 0..per {
            let u = haar_sample_with(d, &mut rng)?;
            let mut ut = u.clone();
            for _ in 1..t {
                ut = kron(&ut, &u);
            }
            acc += &ut * x * ut.adjoint();
        }
        batch_means.push(acc / C64::new(per as f64, 0.0));
    }
    let mean = batch_means.iter().fold(DMatrix::from_element(dim, dim, ZERO), |a, b| a + b) / C64::new(BATCHES as f64, 0.0);
    let se = |f: &dyn Fn(C64) -> f64| {
        DMatrix::from_fn(dim, dim, |i, j| {
            let m = f(mean[(i, j)]);
            let v: f64 = batch_means.iter().map(|b| (f(b[(i, j)]) - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
            (v / BATCHES as f64).sqrt()
        })
    };
    Ok(McTwirl { stderr_re: se(&|c| c.re), stderr_im: se(&|c| c.im), mean })
}

/// Locals L₀, …, L_k around oracle slots O₁, …, O_k: L_k O_k ⋯ L₁ O₁ L₀ |0⟩.
/// The oracle acts on the `query` most significant qubits.
#[derive(Clone, Debug)]
pub struct AdversaryCircuit {
    pub query: u32,
    pub ancilla: u32,
    pub locals: Vec<DenseOperator>,
    pub slots: Vec<Direction>,
}

impl AdversaryCircuit {
    pub fn new(query: u32, ancilla: u32, locals: Vec<DenseOperator>, slots: Vec<Direction>) -> Result<Self> {
        if locals.len() != slots.len() + 1 {
            return Err(Error::Invalid(format!("{} locals for {} slots", locals.len(), slots.len())));
        }
        let dim = 1usize << (query + ancilla);
        for u in &locals {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::DimensionMismatch(u.nrows(), dim));
            }
            if unitarity_defect(u) > 1e-9 {
                return Err(Error::Invalid("local operation is not unitary".into()));
            }
        }
        Ok(AdversaryCircuit { query, ancilla, locals, slots })
    }

    /// Haar-random locals around t alternating forward and inverse slots.
    pub fn random(query: u32, ancilla: u32, t: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let dim = 1usize << (query + ancilla);
        let locals = (0..=t).map(|_| haar_sample_with(dim, &mut rng)).collect::<Result<_>>()?;
        let slots = (0..t).map(|i| if i % 2 == 0 { Direction::Forward } else { Direction::Inverse }).collect();
        Self::new(query, ancilla, locals, slots)
    }

    pub fn dim(&self) -> usize {
        1usize << (self.query + self.ancilla)
    }

    pub fn queries(&self) -> usize {
        self.slots.len()
    }
}

/// Final state with a dense oracle `u` on the query register.
pub fn run_dense(c: &AdversaryCircuit, u: &DenseOperator) -> Result<DenseState> {
    let qd = 1usize << c.query;
    if u.nrows() != qd {
        return Err(Error::DimensionMismatch(u.nrows(), qd));
    }
    let full = kron(u, &DMatrix::identity(1 << c.ancilla, 1 << c.ancilla));
    let full_dag = full.adjoint();
    let mut psi = DVector::from_element(c.dim(), ZERO);
    psi[0] = ONE;
    psi = &c.locals[0] * psi;
    for (k, dir) in c.slots.iter().enumerate() {
        psi = match dir {
            Direction::Forward => &full * psi,
            Direction::Inverse => &full_dag * psi,
        };
        psi = &c.locals[k + 1] * psi;
    }
    Ok(psi)
}

/// Purified oracles for the hybrids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PurifiedOracle {
    /// Two-sided V over 2n+λ bits.
    V,
    /// W^{𝔪(λ)} over 2n+λ bits.
    W,
    /// W^glued with Π^Good after every query.
    GluedGood,
    GluedW,
    GluedV,
}

/// Bytes charged per stored amplitude when sizing purified runs.
pub const ENTRY_BYTES: usize = 128;

/// Entry cap from `HAARGLUE_MAX_MEM_MB` (default 1024 MB).
pub fn max_entries() -> usize {
    let mb = std::env::var("HAARGLUE_MAX_MEM_MB").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(1024);
    mb * (1 << 20) / ENTRY_BYTES
}

fn check_size(psi: &PurifiedState, cap: usize) -> Result<()> {
    let dbs: rustc_hash::FxHashSet<&DbKey> = psi.iter().map(|((_, db), _)| db).collect();
    let size = dbs.len() * psi.layout.dim();
    if size > cap {
        return Err(Error::TooLarge { what: "purified state (databases × system dim)".into(), size, cap });
    }
    Ok(())
}

/// Final purified state; oracle queries act on (n, λ) registers ABC.
/// Saturated label sets drop amplitude instead of failing, so the returned
/// norm can fall below one. Fails with `TooLarge` once the dense-local
/// expansion would exceed [`max_entries`].
pub fn run_purified(c: &AdversaryCircuit, oracle: PurifiedOracle, n: u32, lambda: u32) -> Result<PurifiedState> {
    run_purified_capped(c, oracle, n, lambda, max_entries())
}

pub fn run_purified_capped(c: &AdversaryCircuit, oracle: PurifiedOracle, n: u32, lambda: u32, cap: usize) -> Result<PurifiedState> {
    if c.query != 2 * n + lambda {
        return Err(Error::WidthMismatch { expected: (2 * n + lambda) as usize, got: c.query as usize });
    }
    let g = GluedLayout::new(n, lambda, c.ancilla)?;
    let single = SystemLayout::new(c.query, c.ancilla);
    let glued = |variant| GluedOps::new(g, variant);
    let ops = match oracle {
        PurifiedOracle::GluedV => Some(glued(Variant::Plain)?),
        PurifiedOracle::GluedW | PurifiedOracle::GluedGood => Some(glued(Variant::Mid)?),
        _ => None,
    };
    let mut psi = match ops {
        Some(_) => g.empty_state(0),
        None => PurifiedState::basis(single, Arity::Single, 0, DbKey::empty()),
    }
    .with_saturation(Saturation::Vanish);
    psi = psi.apply_system(&c.locals[0])?;
    for (k, dir) in c.slots.iter().enumerate() {
        let fwd = *dir == Direction::Forward;
        psi = match (oracle, &ops) {
            (PurifiedOracle::V, _) => if fwd { apply_v(&psi) } else { apply_v_dag(&psi) }?,
            (PurifiedOracle::W, _) => if fwd { apply_w_mid(&psi, n, lambda) } else { apply_w_mid_dag(&psi, n, lambda) }?,
            (_, Some(o)) => if fwd { o.apply(&psi) } else { o.apply_dag(&psi) }?,
            _ => unreachable!(),
        };
        if oracle == PurifiedOracle::GluedGood {
            psi = project_good(&psi, &g)?;
        }
        check_size(&psi, cap)?;
        psi = psi.apply_system(&c.locals[k + 1])?;
    }
    Ok(psi)
}

/// ½‖ρ − σ‖₁ without requiring unit traces.
pub fn trace_norm_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(rho.nrows(), sigma.nrows()));
    }
    let d = rho - sigma;
    let d = (&d + d.adjoint()) * C64::new(0.5, 0.0);
    Ok(0.5 * d.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Hybrid {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    H7,
}

impl Hybrid {
    pub const ALL: [Hybrid; 7] = [Hybrid::H1, Hybrid::H2, Hybrid::H3, Hybrid::H4, Hybrid::H5, Hybrid::H6, Hybrid::H7];

    pub fn sampled(self) -> bool {
        matches!(self, Hybrid::H1 | Hybrid::H7)
    }
}

/// A hybrid's output on the adversary's registers; sampled hybrids also
/// carry a second independent half used to size the Monte-Carlo noise.
#[derive(Clone, Debug)]
pub struct HybridOutput {
    pub rho: DensityMatrix,
    pub halves: Option<(DensityMatrix, DensityMatrix)>,
    /// Trace of ρ, below one when the purification ran out of labels.
    pub trace: f64,
}

pub fn hybrid_output(h: Hybrid, c: &AdversaryCircuit, n: u32, lambda: u32, samples: usize, seed: u64) -> Result<HybridOutput> {
    let dim = c.dim();
    match h {
        Hybrid::H1 | Hybrid::H7 => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let g = GluedLayout::new(n, lambda, 0)?;
            let half = samples / 2;
            let mut acc = [DMatrix::from_element(dim, dim, ZERO), DMatrix::from_element(dim, dim, ZERO)];
            for s in 0..2 * half {
                let u = if h == Hybrid::H1 {
                    haar_sample_with(1 << c.query, &mut rng)?
                } else {
                    let w = 1 << (n + lambda);
                    let (u1, u2, u3) = (haar_sample_with(w, &mut rng)?, haar_sample_with(w, &mut rng)?, haar_sample_with(w, &mut rng)?);
                    glued_unitary(&u1, &u2, &u3, &g)?
                };
                let psi = run_dense(c, &u)?;
                acc[s % 2] += &psi * psi.adjoint();
            }
            let a = &acc[0] / C64::new(half as f64, 0.0);
            let b = &acc[1] / C64::new(half as f64, 0.0);
            let rho = (&a + &b) * C64::new(0.5, 0.0);
            let trace = rho.trace().re;
            Ok(HybridOutput { rho, halves: Some((a, b)), trace })
        }
        _ => {
            let oracle = match h {
                Hybrid::H2 => PurifiedOracle::V,
                Hybrid::H3 => PurifiedOracle::W,
                Hybrid::H4 => PurifiedOracle::GluedGood,
                Hybrid::H5 => PurifiedOracle::GluedW,
                _ => PurifiedOracle::GluedV,
            };
            let psi = run_purified(c, oracle, n, lambda)?;
            let rho = psi.reduced_density()?;
            let trace = rho.trace().re;
            Ok(HybridOutput { rho, halves: None, trace })
        }
    }
}

/// Distance between two hybrid outputs and its Monte-Carlo noise scale.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HybridDistance {
    pub value: f64,
    /// Expected distance from sampling noise alone: half the distance between
    /// the two half-sample estimates, summed over sampled sides.
    pub noise: f64,
    pub min_trace: f64,
}

pub fn hybrid_distance(a: &HybridOutput, b: &HybridOutput) -> Result<HybridDistance> {
    let value = trace_norm_distance(&a.rho, &b.rho)?;
    let mut noise = 0.0;
    for o in [a, b] {
        if let Some((x, y)) = &o.halves {
            noise += 0.5 * trace_norm_distance(x, y)?;
        }
    }
    Ok(HybridDistance { value, noise, min_trace: a.trace.min(b.trace) })
}

/// Exact Pr[AB returns to 0] for the flip attack against a Haar unitary on
/// d = 2^{2n+λ} with d_C = 2^n: 1/(d+1) + (d_C − 1)·d/(d² − 1).
pub fn flip_attack_haar(n: u32, lambda: u32) -> f64 {
    let d = 2f64.powi((2 * n + lambda) as i32);
    let dc = 2f64.powi(n as i32);
    1.0 / (d + 1.0) + (dc - 1.0) * d / (d * d - 1.0)
}

/// The flip attack on one unitary: start from |0⟩, apply U, X^s on C, then
/// U†, and return the probability that AB reads 0.
pub fn flip_attack(u: &DenseOperator, n: u32, s: u64) -> f64 {
    let dim = u.nrows();
    let dc = 1usize << n;
    let col = u.column(0).into_owned();
    let mut flipped = DVector::from_element(dim, ZERO);
    for i in 0..dim {
        flipped[i ^ s as usize] = col[i];
    }
    let back = u.adjoint() * flipped;
    (0..dc).map(|c| back[c].norm_sqr()).sum()
}

/// Monte-Carlo mean and batch standard error of the flip attack against
/// G(U¹,U²,U³) with independent Haar components and random nonzero s.
pub fn flip_attack_glued(n: u32, lambda: u32, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let g = GluedLayout::new(n, lambda, 0)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w = 1 << (n + lambda);
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (u1, u2, u3) = (haar_sample_with(w, &mut rng)?, haar_sample_with(w, &mut rng)?, haar_sample_with(w, &mut rng)?);
        let s = rand::Rng::gen_range(&mut rng, 1..(1u64 << n));
        vals.push(flip_attack(&glued_unitary(&u1, &u2, &u3, &g)?, n, s));
    }
    Ok(batch_mean(&vals, BATCHES))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_sample, trace_distance};
    use crate::path_recording::apply_pr;

    #[test]
    fn permutation_operators_compose() {
        for t in 1..=3 {
            let ps = permutations(t);
            assert_eq!(ps.len(), (1..=t).product::<usize>());
            for a in &ps {
                for b in &ps {
                    let (pa, pb) = (PermutationOperator::new(2, a.clone()).unwrap(), PermutationOperator::new(2, b.clone()).unwrap());
                    let prod = pa.compose(&pb).unwrap();
                    assert!((pa.matrix() * pb.matrix() - prod.matrix()).norm() < 1e-12);
                }
            }
        }
        // swap on two qubits
        let s = PermutationOperator::new(2, vec![1, 0]).unwrap().matrix();
        assert_eq!(s[(2, 1)], ONE);
        assert_eq!(s[(1, 2)], ONE);
    }

    #[test]
    fn first_moment_twirl_is_trace_over_d() {
        let x = haar_sample(3, 5).unwrap();
        let tw = weingarten_twirl(1, 3, &x).unwrap();
        let want = DMatrix::identity(3, 3) * (x.trace() / C64::new(3.0, 0.0));
        assert!((tw - want).norm() < 1e-12);
    }

    #[test]
    fn second_moment_weingarten_values() {
        // inverse of [[d², d], [d, d²]]: Wg(e) = 1/(d²−1), Wg(swap) = −1/(d(d²−1))
        for d in [2usize, 3] {
            let wg = weingarten_matrix(2, d).unwrap();
            let df = d as f64;
            assert!((wg[(0, 0)] - 1.0 / (df * df - 1.0)).abs() < 1e-12);
            assert!((wg[(0, 1)] + 1.0 / (df * (df * df - 1.0))).abs() < 1e-12);
        }
        assert!(weingarten_matrix(4, 2).is_err());
    }

    #[test]
    fn twirl_is_in_the_commutant() {
        let x = haar_sample(4, 9).unwrap();
        let tw = weingarten_twirl(2, 2, &x).unwrap();
        for s in 0..20 {
            let u = haar_sample(2, 100 + s).unwrap();
            let uu = kron(&u, &u);
            let c = &uu * &tw - &tw * &uu;
            assert!(c.iter().all(|z| z.norm() < 1e-8));
        }
        // t=3, d=2: the Gram matrix is singular and the pseudo-inverse still projects
        let x = haar_sample(8, 4).unwrap();
        let tw = weingarten_twirl(3, 2, &x).unwrap();
        let tw2 = weingarten_twirl(3, 2, &tw).unwrap();
        assert!((tw2 - &tw).norm() < 1e-10);
    }

    #[test]
    fn empty_circuit_and_identity_oracle() {
        let c = AdversaryCircuit::new(2, 1, vec![DMatrix::identity(8, 8)], vec![]).unwrap();
        let psi = run_dense(&c, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(psi[0], ONE);
        let c = AdversaryCircuit::random(2, 1, 2, 3).unwrap();
        let psi = run_dense(&c, &DMatrix::identity(4, 4)).unwrap();
        let mut e = DVector::from_element(8, ZERO);
        e[0] = ONE;
        let want = &c.locals[2] * &c.locals[1] * &c.locals[0] * e;
        assert!((psi - want).norm() < 1e-12);
    }

    #[test]
    fn one_forward_query_matches_forward_recording() {
        // with fresh databases V acts as V_L, which is PR
        let c = AdversaryCircuit::random(3, 1, 1, 21).unwrap();
        let psi = run_purified(&c, PurifiedOracle::V, 1, 1).unwrap();
        let mut pr = PurifiedState::basis(SystemLayout::new(3, 1), Arity::Single, 0, DbKey::empty());
        pr = apply_pr(&pr.apply_system(&c.locals[0]).unwrap()).unwrap().apply_system(&c.locals[1]).unwrap();
        let (a, b) = (psi.reduced_density().unwrap(), pr.reduced_density().unwrap());
        assert!(trace_distance(&a, &b).unwrap() < 1e-10);
        assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purified_runs_preserve_norm_with_room() {
        let c = AdversaryCircuit::random(4, 0, 1, 8).unwrap();
        for o in [PurifiedOracle::V, PurifiedOracle::W, PurifiedOracle::GluedW, PurifiedOracle::GluedGood, PurifiedOracle::GluedV] {
            let psi = run_purified(&c, o, 1, 2).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-9, "{o:?} {}", psi.norm());
        }
    }

    #[test]
    fn good_projection_does_not_change_glued_runs() {
        for (n, lambda, t, seed) in [(1, 1, 1, 2), (1, 2, 1, 3), (1, 1, 2, 4)] {
            let c = AdversaryCircuit::random(2 * n + lambda, 0, t, seed).unwrap();
            let a = hybrid_output(Hybrid::H4, &c, n, lambda, 0, 0).unwrap();
            let b = hybrid_output(Hybrid::H5, &c, n, lambda, 0, 0).unwrap();
            assert!(hybrid_distance(&a, &b).unwrap().value < 1e-9);
        }
    }

    #[test]
    fn one_query_haar_matches_v() {
        let c = AdversaryCircuit::random(3, 1, 1, 12).unwrap();
        let h1 = hybrid_output(Hybrid::H1, &c, 1, 1, 4000, 5).unwrap();
        let h2 = hybrid_output(Hybrid::H2, &c, 1, 1, 0, 0).unwrap();
        let d = hybrid_distance(&h1, &h2).unwrap();
        assert!(d.value < 4.0 * d.noise + 1e-3, "{d:?}");
    }

    #[test]
    fn oversized_runs_are_refused() {
        let c = AdversaryCircuit::random(5, 0, 1, 8).unwrap();
        let r = run_purified_capped(&c, PurifiedOracle::GluedV, 1, 3, 10_000);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }

    #[test]
    fn flip_attack_haar_value_matches_sampling() {
        let (n, lambda) = (1, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let vals: Vec<f64> = (0..20_000)
            .map(|_| flip_attack(&haar_sample_with(8, &mut rng).unwrap(), n, 1))
            .collect();
        let (m, se) = batch_mean(&vals, BATCHES);
        assert!((m - flip_attack_haar(n, lambda)).abs() < 4.0 * se, "{m} ± {se}");
    }
}
