//! Compression of good glued databases into single-oracle databases, the
//! isometry O_comp, and the commutation checks between one glued query and
//! one query to the single mid-excluding oracle W.
//!
//! A chain of length ℓ = m + 1 compresses to m pairs over strings u‖v‖x
//! (n + λ + n bits). Pair j is (u_{j−1}‖v_{j−1}‖x_j, u_j‖v_j‖y_j) with
//! u₀‖v₀ = x₀‖w₁ and u_m‖v_m = y₀‖w₂; it lands in L when middle j is an
//! L₂ entry and in R otherwise. The interior labels u_j, v_j (ℓ − 2 per
//! chain) are summed over with the v's distinct and outside Im(S̄).

use crate::error::{Error, Result};
use crate::glued::{GluedLayout, GluedOps, ProjectorTag, Variant};
use crate::linalg::{ColumnSet, DenseOperator};
use crate::path_recording::{record, unrecord, Arity, DbKey, Half, PurifiedState, Saturation, L, R};
use crate::path_recording::{apply_w_half, apply_w_mid, apply_w_mid_dag};
use crate::structure::{
    all_tuples, chi_state, distinct_tuples, good_coefficients, good_state, Chain, ChiParams, Family, GoodParam, LineClass,
};
use rand::Rng;
use serde::Serialize;

/// M = b − 2a interior label pairs.
pub fn label_count(s: &GoodParam) -> usize {
    s.len() - 2 * s.count()
}

/// Single-oracle size b − a of comp(S̄, ·, ·).
pub fn single_size(s: &GoodParam) -> usize {
    s.len() - s.count()
}

/// comp(S̄, U, V); labels are consumed chain by chain in S̄ order.
pub fn comp(s: &GoodParam, u: &[u64], v: &[u64], g: &GluedLayout) -> Result<DbKey> {
    let m = label_count(s);
    if u.len() != m || v.len() != m {
        return Err(Error::Invalid(format!("{} and {} labels, need {m}", u.len(), v.len())));
    }
    let (n, lam) = (g.n, g.lambda);
    let big = |u: u64, v: u64, x: u64| (((u << lam) | v) << n) | x;
    let mut entries = Vec::with_capacity(single_size(s));
    let mut off = 0;
    for c in &s.0 {
        c.check(g)?;
        let k = c.len() - 1;
        let mut us = vec![c.x[0]];
        let mut vs = vec![c.w1];
        us.extend_from_slice(&u[off..off + k - 1]);
        vs.extend_from_slice(&v[off..off + k - 1]);
        us.push(c.y[0]);
        vs.push(c.w2);
        off += k - 1;
        for j in 1..=k {
            let left = (j % 2 == 1) == c.class.starts_left();
            let slot = if left { L } else { R };
            entries.push((slot, big(us[j - 1], vs[j - 1], c.x[j]), big(us[j], vs[j], c.y[j])));
        }
    }
    DbKey::from_entries(entries)
}

/// (2^{Mn} (2^λ − a)_M)^{-1/2}, or None when fewer than M labels are free.
pub fn f_amplitude(s: &GoodParam, g: &GluedLayout) -> Option<f64> {
    let (a, m) = (s.count(), label_count(s));
    let free = (1usize << g.lambda).checked_sub(a)?;
    if m > free {
        return None;
    }
    let mut d = 2f64.powi((m as u32 * g.n) as i32);
    for i in 0..m {
        d *= (free - i) as f64;
    }
    Some(1.0 / d.sqrt())
}

/// Support of |F(S̄)⟩.
pub fn f_support(s: &GoodParam, g: &GluedLayout) -> Result<Vec<DbKey>> {
    let m = label_count(s);
    if f_amplitude(s, g).is_none() {
        return Ok(Vec::new());
    }
    let us = all_tuples(g.n, m);
    let vs = distinct_tuples(g.lambda, m, &s.im());
    let mut out = Vec::with_capacity(us.len() * vs.len());
    for u in &us {
        for v in &vs {
            out.push(comp(s, u, v, g)?);
        }
    }
    Ok(out)
}

/// O_comp ψ = Σ ⟨sys, 𝔊(S̄)|ψ⟩ |sys⟩|F(S̄)⟩; the part of ψ outside the good
/// subspace is dropped, see [`good_residual`].
pub fn apply_o_comp(psi: &PurifiedState, g: &GluedLayout) -> Result<PurifiedState> {
    if psi.arity != Arity::Sextuple {
        return Err(Error::ArityMismatch);
    }
    let mut out = PurifiedState::new(psi.layout, Arity::Single).with_saturation(psi.saturation);
    for ((sys, s), c) in good_coefficients(psi, g)? {
        let Some(amp) = f_amplitude(&s, g) else { continue };
        for db in f_support(&s, g)? {
            out.add(sys, db, c * amp);
        }
    }
    out.prune();
    Ok(out)
}

/// ‖(I − Π^Good)ψ‖.
pub fn good_residual(psi: &PurifiedState, g: &GluedLayout) -> Result<f64> {
    Ok(psi.distance(&project(psi, g)?))
}

/// Query direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Forward,
    Inverse,
}

/// The glued mid-rule world next to the single W world on the same system.
pub struct Simulator {
    pub g: GluedLayout,
    pub ops: GluedOps,
}

/// One exact sub-identity of the commutation argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ExactPiece {
    pub direction: Direction,
    pub branch: u8,
}

impl ExactPiece {
    pub const ALL: [ExactPiece; 8] = {
        use Direction::*;
        [
            ExactPiece { direction: Forward, branch: 1 },
            ExactPiece { direction: Forward, branch: 2 },
            ExactPiece { direction: Forward, branch: 3 },
            ExactPiece { direction: Forward, branch: 4 },
            ExactPiece { direction: Inverse, branch: 1 },
            ExactPiece { direction: Inverse, branch: 2 },
            ExactPiece { direction: Inverse, branch: 3 },
            ExactPiece { direction: Inverse, branch: 4 },
        ]
    };

    /// Free red labels the glued side consumes; the identity holds exactly
    /// only on inputs with len(S̄) + headroom ≤ 2^λ.
    pub fn headroom(self) -> usize {
        match self.branch {
            1 => 2,
            2 => 1,
            _ => 0,
        }
    }

    /// A random domain vector of size at most t + 1 with enough free labels.
    pub fn random_input<G: Rng + ?Sized>(self, g: &GluedLayout, t: usize, rng: &mut G) -> Result<Option<PurifiedState>> {
        let cap = 1usize << g.lambda;
        for _ in 0..64 {
            let (psi, len) = match self.domain() {
                None => {
                    let s = random_good_param(g, t, rng);
                    let sys = rng.gen_range(0..1u64 << g.system().total());
                    (good_state(sys, &s, g)?, s.len())
                }
                Some((fam, k)) => match random_chi(g, fam, k, t, rng) {
                    Some(p) => (chi_state(&p, g)?, p.base.len() + p.x.len()),
                    None => continue,
                },
            };
            if len + self.headroom() <= cap {
                return Ok(Some(psi.with_saturation(Saturation::Vanish)));
            }
        }
        Ok(None)
    }

    /// The χ family and index of the domain, or None for all good states.
    pub fn domain(self) -> Option<(Family, u8)> {
        let fam = match self.direction {
            Direction::Forward => Family::Left,
            Direction::Inverse => Family::Right,
        };
        match self.branch {
            1 => None,
            k => Some((fam, k - 1)),
        }
    }
}

/// Operator norms of a column set, from two routes.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct NormReport {
    pub columns: usize,
    pub norm: f64,
    pub frobenius: f64,
    pub max_column: f64,
}

fn report(cs: &ColumnSet<(u64, DbKey)>) -> Result<NormReport> {
    Ok(NormReport { columns: cs.len(), norm: cs.norm()?, frobenius: cs.frobenius(), max_column: cs.max_column_norm() })
}

fn push(cs: &mut ColumnSet<(u64, DbKey)>, v: &PurifiedState) {
    cs.push(v.iter().map(|(k, a)| (k.clone(), *a)));
}

/// Deviation of one glued query from one W query on a set of columns.
#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub direction: Direction,
    pub total: NormReport,
    /// By the input branch projector, in the order of [`GluedOps::branches`]
    /// or [`GluedOps::branches_dag`].
    pub branches: [NormReport; 4],
    /// Largest ‖(I − Π^Good) W^glued ψ‖ over the columns.
    pub leak: f64,
}

impl Simulator {
    pub fn new(g: GluedLayout) -> Result<Self> {
        Ok(Simulator { g, ops: GluedOps::new(g, Variant::Mid)? })
    }

    /// Good basis column |sys⟩|𝔊(S̄)⟩ with vanishing saturation.
    pub fn column(&self, sys: u64, s: &GoodParam) -> Result<PurifiedState> {
        Ok(good_state(sys, s, &self.g)?.with_saturation(Saturation::Vanish))
    }

    pub fn o_comp(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        apply_o_comp(psi, &self.g)
    }

    /// W or W† on a single-oracle state.
    pub fn w(&self, psi: &PurifiedState, dir: Direction) -> Result<PurifiedState> {
        match dir {
            Direction::Forward => apply_w_mid(psi, self.g.n, self.g.lambda),
            Direction::Inverse => apply_w_mid_dag(psi, self.g.n, self.g.lambda),
        }
    }

    /// W^glued or its adjoint.
    pub fn glued(&self, psi: &PurifiedState, dir: Direction) -> Result<PurifiedState> {
        match dir {
            Direction::Forward => self.ops.apply(psi),
            Direction::Inverse => self.ops.apply_dag(psi),
        }
    }

    /// (O_comp Π^Good W^glued − W O_comp) ψ.
    pub fn deviation(&self, psi: &PurifiedState, dir: Direction) -> Result<PurifiedState> {
        let lhs = self.o_comp(&self.glued(psi, dir)?)?;
        let rhs = self.w(&self.o_comp(psi)?, dir)?;
        Ok(lhs.minus(&rhs))
    }

    /// Input branch projections of ψ; they sum to ψ.
    pub fn split_branches(&self, psi: &PurifiedState, dir: Direction) -> Result<[PurifiedState; 4]> {
        let p = |t| self.ops.projector(psi, t);
        Ok(match dir {
            Direction::Forward => [
                p(ProjectorTag::Branch(1))?,
                p(ProjectorTag::Branch(2))?,
                p(ProjectorTag::Branch(3))?,
                p(ProjectorTag::Branch(4))?,
            ],
            Direction::Inverse => {
                let (a, b, c) = (p(ProjectorTag::L3)?, p(ProjectorTag::L32)?, p(ProjectorTag::L321)?);
                [c.clone(), b.minus(&c), a.minus(&b), psi.minus(&a)]
            }
        })
    }

    /// Commutation deviation over the given good columns.
    pub fn commutation(&self, columns: &[(u64, GoodParam)], dir: Direction) -> Result<CommutationReport> {
        let mut total = ColumnSet::new();
        let mut parts: [ColumnSet<(u64, DbKey)>; 4] = Default::default();
        let mut leak = 0f64;
        for (sys, s) in columns {
            let psi = self.column(*sys, s)?;
            let out = self.glued(&psi, dir)?;
            leak = leak.max(good_residual(&out, &self.g)?);
            let rhs = self.w(&self.o_comp(&psi)?, dir)?;
            push(&mut total, &self.o_comp(&out)?.minus(&rhs));
            for (k, part) in self.split_branches(&psi, dir)?.iter().enumerate() {
                push(&mut parts[k], &self.deviation(part, dir)?);
            }
        }
        let b = [report(&parts[0])?, report(&parts[1])?, report(&parts[2])?, report(&parts[3])?];
        Ok(CommutationReport { direction: dir, total: report(&total)?, branches: b, leak })
    }

    fn rec(&self, psi: &PurifiedState, i: usize, h: Half) -> Result<PurifiedState> {
        record(psi, self.ops.rule(i, h))
    }

    fn unrec(&self, psi: &PurifiedState, i: usize, h: Half) -> Result<PurifiedState> {
        unrecord(psi, self.ops.rule(i, h))
    }

    /// Left minus right side of one exact sub-identity on ψ.
    pub fn exact_defect(&self, piece: ExactPiece, psi: &PurifiedState) -> Result<PurifiedState> {
        use Direction::*;
        use Half::{L as HL, R as HR};
        let (n, lam) = (self.g.n, self.g.lambda);
        let glued = match (piece.direction, piece.branch) {
            (Forward, 1) => self.rec(&self.rec(&self.rec(psi, 1, HL)?, 2, HL)?, 3, HL)?,
            (Forward, 2) => self.rec(&self.rec(&self.unrec(psi, 1, HR)?, 2, HL)?, 3, HL)?,
            (Forward, 3) => self.rec(&self.unrec(&self.unrec(psi, 1, HR)?, 2, HR)?, 3, HL)?,
            (Forward, 4) => self.unrec(&self.unrec(&self.unrec(psi, 1, HR)?, 2, HR)?, 3, HR)?,
            (Inverse, 1) => self.rec(&self.rec(&self.rec(psi, 3, HR)?, 2, HR)?, 1, HR)?,
            (Inverse, 2) => self.rec(&self.rec(&self.unrec(psi, 3, HL)?, 2, HR)?, 1, HR)?,
            (Inverse, 3) => self.rec(&self.unrec(&self.unrec(psi, 3, HL)?, 2, HL)?, 1, HR)?,
            (Inverse, 4) => self.unrec(&self.unrec(&self.unrec(psi, 3, HL)?, 2, HL)?, 1, HL)?,
            _ => return Err(Error::Invalid(format!("branch {}", piece.branch))),
        };
        // the matching single half: W_L, W_R or an adjoint
        let (half, dagger) = match (piece.direction, piece.branch) {
            (Forward, 1 | 2) => (Half::L, false),
            (Forward, _) => (Half::R, true),
            (Inverse, 1 | 2) => (Half::R, false),
            (Inverse, _) => (Half::L, true),
        };
        let single = apply_w_half(&self.o_comp(psi)?, n, lam, half, dagger)?;
        Ok(self.o_comp(&glued)?.minus(&single))
    }

    /// Norms of one exact sub-identity over explicit domain vectors.
    pub fn exact_piece(&self, piece: ExactPiece, domain: &[PurifiedState]) -> Result<NormReport> {
        let mut cs = ColumnSet::new();
        for psi in domain {
            push(&mut cs, &self.exact_defect(piece, &psi.clone().with_saturation(Saturation::Vanish))?);
        }
        report(&cs)
    }
}

/// A random good parameter with b − a ≤ t and b ≤ 2^λ.
pub fn random_good_param<G: Rng + ?Sized>(g: &GluedLayout, t: usize, rng: &mut G) -> GoodParam {
    let cap = 1usize << g.lambda;
    let mut s = GoodParam::default();
    loop {
        let (b, size) = (s.len(), single_size(&s));
        let room = (cap - b).min(t - size + 1);
        if room < 2 || s.count() == cap || rng.gen_bool(0.4) {
            return s;
        }
        let len = rng.gen_range(2..=room);
        let parity_ok: Vec<LineClass> =
            LineClass::ALL.into_iter().filter(|c| (len - 1) % 2 == usize::from(c.starts_left() == c.ends_left())).collect();
        let class = parity_ok[rng.gen_range(0..parity_ok.len())];
        let im = s.im();
        let free: Vec<u64> = (0..cap as u64).filter(|w| !im.contains(w)).collect();
        let w2 = free[rng.gen_range(0..free.len())];
        let nb = 1u64 << g.n;
        let chain = Chain {
            class,
            x: (0..len).map(|_| rng.gen_range(0..nb)).collect(),
            y: (0..len).map(|_| rng.gen_range(0..nb)).collect(),
            w1: rng.gen_range(0..cap as u64),
            w2,
        };
        s = s.with(chain);
    }
}

/// A random valid χ parameter whose full parameter has b − a ≤ t + 1 and b ≤ 2^λ.
/// Returns None when no shape fits.
pub fn random_chi<G: Rng + ?Sized>(g: &GluedLayout, family: Family, index: u8, t: usize, rng: &mut G) -> Option<ChiParams> {
    let cap = 1usize << g.lambda;
    for _ in 0..64 {
        let base = random_good_param(g, t, rng);
        if base.count() + 1 > cap {
            continue;
        }
        let room = cap - base.len();
        let lens: Vec<usize> = (2..=room)
            .filter(|&l| match index {
                1 => true,
                2 => l >= 3,
                _ => l == 2,
            })
            .filter(|&l| single_size(&base) + l - 1 <= t + 1)
            .collect();
        if lens.is_empty() {
            continue;
        }
        let len = lens[rng.gen_range(0..lens.len())];
        let end_left = family == Family::Right;
        // even middle count means the chain starts on the other side
        let start_left = if (len - 1) % 2 == 1 { end_left } else { !end_left };
        let nb = 1u64 << g.n;
        let fixed = match index {
            1 => len - 1,
            2 => len - 2,
            _ => 0,
        };
        let p = ChiParams {
            family,
            index,
            base,
            start_left,
            x: (0..len).map(|_| rng.gen_range(0..nb)).collect(),
            y: (0..fixed).map(|_| rng.gen_range(0..nb)).collect(),
            w1: rng.gen_range(0..cap as u64),
            c: rng.gen_range(0..nb),
        };
        if p.valid(g) {
            return Some(p);
        }
    }
    None
}

/// One step of the hybrid induction.
#[derive(Clone, Debug, Serialize)]
pub struct InductionStep {
    pub query: usize,
    pub direction: Direction,
    /// ‖O_comp φ_i − ψ_i‖.
    pub distance: f64,
    /// ‖(O_comp Π^Good W^glued − W O_comp) A_i φ_{i−1}‖.
    pub step_deviation: f64,
    pub cumulative_bound: f64,
    /// Norm of the glued state, which shrinks when labels run out.
    pub glued_norm: f64,
}

/// Run alternating queries with adversary unitaries `us[i]` before query i
/// in both worlds, from |0⟩|∅⟩.
pub fn induction(sim: &Simulator, us: &[DenseOperator]) -> Result<Vec<InductionStep>> {
    let g = &sim.g;
    let mut phi = g.empty_state(0).with_saturation(Saturation::Vanish);
    let mut psi = PurifiedState::basis(g.system(), Arity::Single, 0, DbKey::empty()).with_saturation(Saturation::Vanish);
    let mut bound = 0.0;
    let mut out = Vec::with_capacity(us.len());
    for (i, u) in us.iter().enumerate() {
        let dir = if i % 2 == 0 { Direction::Forward } else { Direction::Inverse };
        let a_phi = phi.apply_system(u)?;
        let e = sim.deviation(&a_phi, dir)?.norm();
        bound += e;
        phi = project(&sim.glued(&a_phi, dir)?, g)?;
        psi = sim.w(&psi.apply_system(u)?, dir)?;
        let distance = sim.o_comp(&phi)?.distance(&psi);
        out.push(InductionStep { query: i + 1, direction: dir, distance, step_deviation: e, cumulative_bound: bound, glued_norm: phi.norm() });
    }
    Ok(out)
}

fn project(psi: &PurifiedState, g: &GluedLayout) -> Result<PurifiedState> {
    crate::structure::project_good(psi, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glued::{L1, L2, L3, R1, R2, R3};
    use crate::linalg::haar_sample;
    use crate::structure::{chi_state, enumerate_good_params, good_support, unparametrize, RedLabels};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lay(n: u32, lam: u32) -> GluedLayout {
        GluedLayout::new(n, lam, 0).unwrap()
    }

    fn chain(class: LineClass, x: &[u64], y: &[u64], w1: u64, w2: u64) -> Chain {
        Chain { class, x: x.to_vec(), y: y.to_vec(), w1, w2 }
    }

    #[test]
    fn comp_of_a_long_chain() {
        // LR chain of length 3: middles L₂, R₂; pairs go to L then R
        let g = lay(1, 2);
        let c = chain(LineClass::LR, &[1, 0, 1], &[0, 1, 1], 2, 3);
        let s = GoodParam::new([c]);
        assert_eq!(label_count(&s), 1);
        let db = comp(&s, &[1], &[0], &g).unwrap();
        let big = |u: u64, v: u64, x: u64| (((u << 2) | v) << 1) | x;
        let want = DbKey::from_entries([(L, big(1, 2, 0), big(1, 0, 1)), (R, big(1, 0, 1), big(0, 3, 1))]).unwrap();
        assert_eq!(db, want);
        // v must avoid Im(S̄) = {3}: three choices, two u's
        assert_eq!(f_support(&s, &g).unwrap().len(), 6);
        assert!((f_amplitude(&s, &g).unwrap() - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn o_comp_is_isometric_on_small_good_states() {
        let g = lay(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cols: Vec<(u64, GoodParam)> = (0..40).map(|i| (i % 32, random_good_param(&g, 2, &mut rng))).collect();
        for (sys, s) in &cols {
            let psi = good_state(*sys, s, &g).unwrap();
            let out = apply_o_comp(&psi, &g).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10, "{s:?}");
            assert!(good_residual(&psi, &g).unwrap() < 1e-7);
        }
        let bad = PurifiedState::basis(g.system(), Arity::Sextuple, 0, DbKey::from_entries([(L2, 0, 0)]).unwrap());
        assert!(apply_o_comp(&bad, &g).unwrap().is_empty());
        assert!((good_residual(&bad, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_replay_through_single_queries() {
        // walking a chain with W_L / W_R reaches every compressed pair
        let g = lay(1, 2);
        let s = GoodParam::new([chain(LineClass::LL, &[0, 1, 1, 0], &[1, 0, 1, 1], 1, 2)]);
        let (u, v) = (vec![1, 0], vec![0, 3]);
        let db = comp(&s, &u, &v, &g).unwrap();
        let c = s.0.first().unwrap();
        let mut state = PurifiedState::basis(g.system(), Arity::Single, 0, DbKey::empty());
        let us = [c.x[0], u[0], u[1], c.y[0]];
        let vs = [c.w1, v[0], v[1], c.w2];
        let big = |u: u64, v: u64, x: u64| (((u << 2) | v) << 1) | x;
        let mut expected = DbKey::empty();
        for j in 1..=3 {
            let half = if j % 2 == 1 { Half::L } else { Half::R };
            let slot = if half == Half::L { L } else { R };
            let (inp, outp) = (big(us[j - 1], vs[j - 1], c.x[j]), big(us[j], vs[j], c.y[j]));
            let start: Vec<_> = state.iter().filter(|(k, _)| k.1 == expected).map(|(k, a)| (k.clone(), *a)).collect();
            let mut fixed = state.empty_like();
            for ((_, db0), a) in start {
                fixed.add(inp, db0, a);
            }
            state = apply_w_half(&fixed, 1, 2, half, false).unwrap();
            expected = expected.with(slot, inp, outp).unwrap();
            assert!(state.get(outp, &expected).norm() > 1e-9, "pair {j}");
        }
        assert_eq!(expected, db);
        // and back down with the adjoints
        let mut back = PurifiedState::basis(g.system(), Arity::Single, big(c.y[0], c.w2, c.y[3]), db.clone());
        for j in (1..=3).rev() {
            let half = if j % 2 == 1 { Half::L } else { Half::R };
            back = apply_w_half(&back, 1, 2, half, true).unwrap();
            let sys = big(us[j - 1], vs[j - 1], c.x[j]);
            let mut next = back.empty_like();
            let amp = back.iter().find(|(k, _)| k.0 == sys).map(|(_, a)| *a).unwrap();
            let db_left = back.iter().find(|(k, _)| k.0 == sys).map(|(k, _)| k.1.clone()).unwrap();
            if j > 1 {
                next.add(big(us[j - 1], vs[j - 1], c.y[j - 1]), db_left, amp);
            } else {
                next.add(sys, db_left, amp);
            }
            back = next;
        }
        assert!(back.iter().all(|(k, _)| k.1.is_empty()));
    }

    #[test]
    fn lemma_two_chi_identities() {
        // V_R¹V_R²V_L³† χ^{𝔯,1}⊗|x'⟩ = χ^{𝔩,2} with x⃗‖x', and the mirror
        let g = lay(1, 2);
        let sim = Simulator::new(g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        for _ in 0..30 {
            for (fam, other) in [(Family::Right, Family::Left), (Family::Left, Family::Right)] {
                let Some(p) = random_chi(&g, fam, 1, 2, &mut rng) else { continue };
                let mut q = p.clone();
                q.family = other;
                q.index = 2;
                q.x.push(p.c);
                if !q.valid(&g) || q.base.len() + q.x.len() > 4 {
                    continue;
                }
                let psi = chi_state(&p, &g).unwrap().with_saturation(Saturation::Vanish);
                let out = match fam {
                    Family::Right => sim.rec(&sim.rec(&sim.unrec(&psi, 3, Half::L).unwrap(), 2, Half::R).unwrap(), 1, Half::R),
                    Family::Left => sim.rec(&sim.rec(&sim.unrec(&psi, 1, Half::R).unwrap(), 2, Half::L).unwrap(), 3, Half::L),
                }
                .unwrap();
                let want = chi_state(&q, &g).unwrap();
                assert!(out.distance(&want) < 1e-10, "{p:?}");
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn good_right_one_projection_is_chi_span() {
        // Π^Good Π^{R,1} on a good column equals Σ |χ^{𝔩,1}⟩⟨χ^{𝔩,1}| applied to it
        let g = lay(1, 1);
        let sim = Simulator::new(g).unwrap();
        for s in enumerate_good_params(&g, 2, 1) {
            for sys in 0..8u64 {
                let psi = sim.column(sys, &s).unwrap();
                let lhs = crate::structure::project_good(&sim.ops.projector(&psi, ProjectorTag::R1).unwrap(), &g).unwrap();
                let mut rhs = psi.empty_like();
                let (a, b) = (sys >> 2, (sys >> 1) & 1);
                for c in &s.0 {
                    if c.class.ends_left() || c.y[0] != a || c.w2 != b {
                        continue;
                    }
                    let p = ChiParams {
                        family: Family::Left,
                        index: 1,
                        base: s.without(c),
                        start_left: c.class.starts_left(),
                        x: c.x.clone(),
                        y: c.y[1..].to_vec(),
                        w1: c.w1,
                        c: sys & 1,
                    };
                    let chi = chi_state(&p, &g).unwrap();
                    rhs.axpy(chi.inner(&psi), &chi);
                }
                assert!(lhs.distance(&rhs) < 1e-10, "{sys} {s:?}");
            }
        }
    }

    #[test]
    fn exact_pieces_vanish_on_samples() {
        let g = lay(1, 2);
        let sim = Simulator::new(g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for piece in ExactPiece::ALL {
            let dom: Vec<_> = (0..12).filter_map(|_| piece.random_input(&g, 2, &mut rng).unwrap()).collect();
            assert!(!dom.is_empty());
            let r = sim.exact_piece(piece, &dom).unwrap();
            assert!(r.frobenius < 1e-9, "{piece:?}: {r:?}");
        }
    }

    #[test]
    fn fresh_queries_commute_exactly() {
        let g = lay(1, 1);
        let sim = Simulator::new(g).unwrap();
        let cols: Vec<_> = (0..8).map(|s| (s, GoodParam::default())).collect();
        for dir in [Direction::Forward, Direction::Inverse] {
            let r = sim.commutation(&cols, dir).unwrap();
            assert!(r.total.norm < 1e-10, "{dir:?} {r:?}");
            assert!(r.leak < 1e-10);
        }
    }

    #[test]
    fn induction_stays_within_cumulative_bound() {
        let g = lay(1, 1);
        let sim = Simulator::new(g).unwrap();
        let us: Vec<_> = (0..4).map(|i| haar_sample(8, 100 + i).unwrap()).collect();
        for step in induction(&sim, &us).unwrap() {
            assert!(step.distance <= step.cumulative_bound + 1e-9, "{step:?}");
        }
    }

    #[test]
    fn unparametrized_support_matches_good_state() {
        let g = lay(1, 1);
        let s = GoodParam::new([chain(LineClass::RR, &[1, 0], &[0, 1], 1, 0)]);
        let db = unparametrize(&s, &[RedLabels { r: vec![1, 0], z: 1 }], &g).unwrap();
        assert!(good_support(&s, &g).unwrap().contains(&db));
        let slots: Vec<u8> = db.entries().map(|e| e.0).collect();
        assert_eq!(slots, vec![R1, R2, R3]);
        let _ = (L1, L3);
    }
}
