//! Dense complex linear algebra over small multi-qubit registers.
//!
//! Bit order: the first register of a layout holds the most significant bits,
//! and inside a register the leftmost bit is the most significant one.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rustc_hash::FxHashMap;
use std::hash::Hash;

pub type C64 = Complex64;
pub type DenseOperator = DMatrix<C64>;
pub type DenseState = DVector<C64>;
pub type DensityMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Named registers, most significant first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new(regs: &[(&str, usize)]) -> Self {
        RegisterLayout {
            regs: regs.iter().map(|(s, w)| (s.to_string(), *w)).collect(),
        }
    }

    /// A(n) B(λ) C(n) followed by an ancilla D.
    pub fn glued(n: usize, lambda: usize, ancilla: usize) -> Self {
        Self::new(&[("A", n), ("B", lambda), ("C", n), ("D", ancilla)])
    }

    pub fn total(&self) -> usize {
        self.regs.iter().map(|r| r.1).sum()
    }

    pub fn dim(&self) -> usize {
        1usize << self.total()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.regs.iter().map(|r| r.0.as_str())
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .find(|r| r.0 == name)
            .map(|r| r.1)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    /// Offset of the register's least significant bit.
    pub fn shift(&self, name: &str) -> Result<usize> {
        let pos = self
            .regs
            .iter()
            .position(|r| r.0 == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))?;
        Ok(self.regs[pos + 1..].iter().map(|r| r.1).sum())
    }

    /// Value of register `name` inside the full index `i`.
    pub fn read(&self, name: &str, i: usize) -> Result<usize> {
        let (s, w) = (self.shift(name)?, self.width(name)?);
        Ok((i >> s) & ((1usize << w) - 1))
    }

    /// Concatenation of the given registers (first most significant) as a
    /// sub-index, together with the mask of the bits they occupy.
    fn gather(&self, targets: &[&str]) -> Result<Vec<(usize, usize)>> {
        let mut seen = Vec::new();
        for t in targets {
            if seen.contains(t) {
                return Err(Error::Invalid(format!("register {t} listed twice")));
            }
            seen.push(*t);
        }
        targets
            .iter()
            .map(|t| Ok((self.shift(t)?, self.width(t)?)))
            .collect()
    }
}

fn sub_index(parts: &[(usize, usize)], i: usize) -> usize {
    parts
        .iter()
        .fold(0, |acc, &(s, w)| (acc << w) | ((i >> s) & ((1 << w) - 1)))
}

fn place(parts: &[(usize, usize)], mut t: usize) -> usize {
    let mut out = 0;
    for &(s, w) in parts.iter().rev() {
        out |= (t & ((1 << w) - 1)) << s;
        t >>= w;
    }
    out
}

/// Haar-random unitary from a seed.
pub fn haar_sample(dim: usize, seed: u64) -> Result<DenseOperator> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    haar_sample_with(dim, &mut rng)
}

/// Ginibre matrix, QR, then the phases of diag(R) moved into Q.
pub fn haar_sample_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DenseOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    Ok(q)
}

pub fn unitarity_defect(u: &DenseOperator) -> f64 {
    let p = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let e = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - e).norm());
        }
    }
    worst
}

pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_density(rho: &DensityMatrix) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch(rho.nrows(), rho.ncols()));
    }
    let h = hermiticity_defect(rho);
    if h > 1e-8 {
        return Err(Error::NotHermitian(h));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > 1e-8 {
        return Err(Error::BadTrace(tr.re));
    }
    Ok(())
}

/// ½‖ρ − σ‖₁ from the eigenvalues of the difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(rho.nrows(), sigma.nrows()));
    }
    check_density(rho)?;
    check_density(sigma)?;
    let mut d = rho - sigma;
    // symmetrize so the Hermitian solver sees an exactly Hermitian input
    let dh = d.adjoint();
    d = (d + dh) * C64::new(0.5, 0.0);
    let ev = d.symmetric_eigen().eigenvalues;
    Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
}

pub fn pure_density(psi: &DenseState) -> DensityMatrix {
    psi * psi.adjoint()
}

/// Trace out every register not in `keep`; kept registers stay in layout order.
pub fn partial_trace(rho: &DensityMatrix, layout: &RegisterLayout, keep: &[&str]) -> Result<DensityMatrix> {
    if rho.nrows() != layout.dim() || rho.ncols() != layout.dim() {
        return Err(Error::DimensionMismatch(rho.nrows(), layout.dim()));
    }
    for k in keep {
        layout.width(k)?;
    }
    let kept: Vec<&str> = layout.names().filter(|n| keep.contains(n)).collect();
    let traced: Vec<&str> = layout.names().filter(|n| !keep.contains(n)).collect();
    let kp = layout.gather(&kept)?;
    let tp = layout.gather(&traced)?;
    let kw: usize = kp.iter().map(|p| p.1).sum();
    let tw: usize = tp.iter().map(|p| p.1).sum();
    let mut out = DMatrix::from_element(1 << kw, 1 << kw, ZERO);
    for a in 0..(1usize << kw) {
        let ia = place(&kp, a);
        for b in 0..(1usize << kw) {
            let ib = place(&kp, b);
            let mut s = ZERO;
            for r in 0..(1usize << tw) {
                let pr = place(&tp, r);
                s += rho[(ia | pr, ib | pr)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// Apply `u` to the listed registers (first listed = most significant).
pub fn apply_on_registers(
    u: &DenseOperator,
    psi: &DenseState,
    layout: &RegisterLayout,
    targets: &[&str],
) -> Result<DenseState> {
    let parts = layout.gather(targets)?;
    let w: usize = parts.iter().map(|p| p.1).sum();
    if u.nrows() != 1 << w || u.ncols() != 1 << w {
        return Err(Error::WidthMismatch { expected: w, got: u.nrows() });
    }
    if psi.len() != layout.dim() {
        return Err(Error::DimensionMismatch(psi.len(), layout.dim()));
    }
    let mask = place(&parts, (1 << w) - 1);
    let places: Vec<usize> = (0..(1usize << w)).map(|t| place(&parts, t)).collect();
    let mut out = DVector::from_element(psi.len(), ZERO);
    for i in 0..psi.len() {
        let rest = i & !mask;
        let ti = sub_index(&parts, i);
        let mut s = ZERO;
        for (tj, pj) in places.iter().enumerate() {
            s += u[(ti, tj)] * psi[rest | pj];
        }
        out[i] = s;
    }
    Ok(out)
}

/// The full-register matrix of `u` acting on `targets`.
pub fn embed_operator(u: &DenseOperator, layout: &RegisterLayout, targets: &[&str]) -> Result<DenseOperator> {
    let dim = layout.dim();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for j in 0..dim {
        let mut e = DVector::from_element(dim, ZERO);
        e[j] = ONE;
        let col = apply_on_registers(u, &e, layout, targets)?;
        m.set_column(j, &col);
    }
    Ok(m)
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn pauli_x() -> DenseOperator {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// Power-iteration limits.
#[derive(Clone, Copy, Debug)]
pub struct PowerOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { max_iter: 10_000, tol: 1e-10, seed: 0x5eed }
    }
}

/// A linear map given densely or through its action and adjoint action.
pub enum LinearMap<'a> {
    Dense(&'a DenseOperator),
    MatrixFree {
        dim_in: usize,
        apply: &'a dyn Fn(&DenseState) -> DenseState,
        apply_adj: &'a dyn Fn(&DenseState) -> DenseState,
    },
}

/// Largest singular value. Dense maps use the SVD; matrix-free maps use
/// power iteration on adjoint∘map.
pub fn operator_norm(map: &LinearMap, opts: PowerOptions) -> Result<f64> {
    match map {
        LinearMap::Dense(m) => Ok(dense_norm(m)),
        LinearMap::MatrixFree { dim_in, apply, apply_adj } => {
            let lam = power_iteration(*dim_in, |v| apply_adj(&apply(v)), opts)?;
            Ok(lam.max(0.0).sqrt())
        }
    }
}

pub fn dense_norm(m: &DenseOperator) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(m: &DenseOperator) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().singular_values().iter().cloned().collect()
}

/// Top eigenvalue of a positive semidefinite map by power iteration.
/// Converged once successive Rayleigh quotients differ by less than `tol`.
pub fn power_iteration<F: Fn(&DenseState) -> DenseState>(dim: usize, gram: F, opts: PowerOptions) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut v = DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    v /= C64::new(v.norm(), 0.0);
    let mut last = f64::NAN;
    for _ in 0..opts.max_iter {
        let w = gram(&v);
        let rq = v.dotc(&w).re;
        let nw = w.norm();
        if nw == 0.0 {
            return Ok(0.0);
        }
        if (rq - last).abs() < opts.tol {
            return Ok(rq);
        }
        last = rq;
        v = w / C64::new(nw, 0.0);
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, last })
}

/// Columns of a linear map given as sparse vectors over hashable row keys.
/// Norms are computed on connected blocks (columns sharing a row), which is
/// exact because disjoint blocks have orthogonal ranges and domains.
pub struct ColumnSet<K: Hash + Eq + Clone> {
    rows: FxHashMap<K, usize>,
    cols: Vec<Vec<(usize, C64)>>,
}

impl<K: Hash + Eq + Clone> Default for ColumnSet<K> {
    fn default() -> Self {
        ColumnSet { rows: FxHashMap::default(), cols: Vec::new() }
    }
}

/// Blocks with more columns than this use power iteration.
pub const DENSE_BLOCK_CAP: usize = 1200;

impl<K: Hash + Eq + Clone> ColumnSet<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push<I: IntoIterator<Item = (K, C64)>>(&mut self, col: I) {
        let mut c = Vec::new();
        for (k, a) in col {
            if a.norm() == 0.0 {
                continue;
            }
            let n = self.rows.len();
            let r = *self.rows.entry(k).or_insert(n);
            c.push((r, a));
        }
        self.cols.push(c);
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn frobenius(&self) -> f64 {
        self.cols
            .iter()
            .flat_map(|c| c.iter())
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_column_norm(&self) -> f64 {
        self.cols
            .iter()
            .map(|c| c.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Column indices grouped into connected blocks; zero columns are dropped.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.cols.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut owner: Vec<usize> = vec![usize::MAX; self.rows.len()];
        for (j, c) in self.cols.iter().enumerate() {
            for &(r, _) in c {
                if owner[r] == usize::MAX {
                    owner[r] = j;
                } else {
                    let (a, b) = (find(&mut parent, owner[r]), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
        for j in 0..self.cols.len() {
            if self.cols[j].is_empty() {
                continue;
            }
            let root = find(&mut parent, j);
            groups.entry(root).or_default().push(j);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|b| b[0]);
        out
    }

    fn gram(&self, block: &[usize]) -> DMatrix<C64> {
        let m = block.len();
        let mut by_row: FxHashMap<usize, Vec<(usize, C64)>> = FxHashMap::default();
        for (bj, &j) in block.iter().enumerate() {
            for &(r, a) in &self.cols[j] {
                by_row.entry(r).or_default().push((bj, a));
            }
        }
        let mut g = DMatrix::from_element(m, m, ZERO);
        for entries in by_row.values() {
            for &(i, a) in entries {
                for &(j, b) in entries {
                    g[(i, j)] += a.conj() * b;
                }
            }
        }
        g
    }

    fn block_top(&self, block: &[usize], opts: PowerOptions) -> Result<f64> {
        if block.len() <= DENSE_BLOCK_CAP {
            let g = self.gram(block);
            let ev = g.symmetric_eigen().eigenvalues;
            return Ok(ev.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt());
        }
        // matrix-free: v ↦ A†A v restricted to the block
        let lam = power_iteration(
            block.len(),
            |v| {
                let mut acc: FxHashMap<usize, C64> = FxHashMap::default();
                for (bi, &j) in block.iter().enumerate() {
                    for &(r, a) in &self.cols[j] {
                        *acc.entry(r).or_insert(ZERO) += a * v[bi];
                    }
                }
                DVector::from_fn(block.len(), |bi, _| {
                    self.cols[block[bi]]
                        .iter()
                        .map(|(r, a)| a.conj() * acc.get(r).copied().unwrap_or(ZERO))
                        .sum()
                })
            },
            opts,
        )?;
        Ok(lam.max(0.0).sqrt())
    }

    /// Operator norm of the map whose columns were pushed.
    pub fn norm(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for b in self.blocks() {
            best = best.max(self.block_top(&b, PowerOptions::default())?);
        }
        Ok(best)
    }

    /// Every singular value, zero columns included as zeros.
    /// Fails if a block exceeds the dense cap.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let blocks = self.blocks();
        let nonzero: usize = blocks.iter().map(|b| b.len()).sum();
        let mut out = vec![0.0; self.cols.len() - nonzero];
        for b in blocks {
            if b.len() > DENSE_BLOCK_CAP {
                return Err(Error::TooLarge { what: "column block".into(), size: b.len(), cap: DENSE_BLOCK_CAP });
            }
            // SVD of the block itself keeps zero singular values at roundoff
            // level, where square roots of Gram eigenvalues would not
            let sub = self.block_matrix(&b);
            let mut sv: Vec<f64> = sub.singular_values().iter().cloned().collect();
            sv.resize(b.len(), 0.0);
            out.extend(sv);
        }
        Ok(out)
    }

    fn block_matrix(&self, block: &[usize]) -> DMatrix<C64> {
        let mut local: FxHashMap<usize, usize> = FxHashMap::default();
        for &j in block {
            for &(r, _) in &self.cols[j] {
                let n = local.len();
                local.entry(r).or_insert(n);
            }
        }
        let mut m = DMatrix::from_element(local.len(), block.len(), ZERO);
        for (bj, &j) in block.iter().enumerate() {
            for &(r, a) in &self.cols[j] {
                m[(local[&r], bj)] += a;
            }
        }
        m
    }

    /// Dense matrix of the columns (rows in first-seen order). Test use only.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.rows.len(), self.cols.len(), ZERO);
        for (j, c) in self.cols.iter().enumerate() {
            for &(r, a) in c {
                m[(r, j)] += a;
            }
        }
        m
    }
}
