//! Graphs of sextuple databases, good chains and their parametrization,
//! good states |𝔊(S̄)⟩, the projector Π^Good and the χ states.
//!
//! A good chain of length ℓ = m + 1 has a start entry in L₁ or R₃, m middle
//! entries alternating between L₂ and R₂, and an end entry in L₃ or R₁:
//!
//! ```text
//! start   (x₀‖w₁,  z‖r₁)            AB
//! middle  (r_k‖x_k, r_{k+1}‖y_k)     BC, k = 1..m
//! end     (z‖r_{m+1}, y₀‖w₂)        AB
//! ```
//!
//! The blue labels x⃗, y⃗ (ℓ entries of n bits), w₁, w₂ form the descriptor 𝔮;
//! the red labels r⃗ (ℓ entries of λ bits) and z (n bits) are summed over.

use crate::error::{Error, Result};
use crate::glued::{GluedLayout, L1, L2, L3, R1, R2, R3};
use crate::linalg::C64;
use crate::path_recording::{Arity, DbKey, PurifiedState};
use crate::relations::mask;
use rustc_hash::FxHashMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub slot: u8,
    pub x: u64,
    pub y: u64,
}

fn tag_name(slot: u8) -> &'static str {
    ["l1", "r1", "l2", "r2", "l3", "r3"][slot as usize]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseGraph {
    pub vertices: Vec<Vertex>,
    /// Directed edges as vertex index pairs, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl DatabaseGraph {
    /// One vertex per entry, edges from the six families.
    pub fn build(db: &DbKey, g: &GluedLayout) -> DatabaseGraph {
        let (n, lam) = (g.n, g.lambda);
        let vertices: Vec<Vertex> = db.entries().map(|(slot, x, y)| Vertex { slot, x, y }).collect();
        // B bits of an AB string are its low λ, of a BC string its high λ
        let ab_b = |v: u64| v & mask(lam);
        let bc_b = |v: u64| v >> n;
        let linked = |a: &Vertex, b: &Vertex| -> bool {
            match (a.slot, b.slot) {
                (L1, L2) | (R3, R2) => ab_b(a.y) == bc_b(b.x),
                (L2, L3) | (R2, R1) => bc_b(a.y) == ab_b(b.x),
                (L2, R2) | (R2, L2) => bc_b(a.y) == bc_b(b.x),
                _ => false,
            }
        };
        let mut edges = Vec::new();
        for (i, a) in vertices.iter().enumerate() {
            for (j, b) in vertices.iter().enumerate() {
                if i != j && linked(a, b) {
                    edges.push((i, j));
                }
            }
        }
        DatabaseGraph { vertices, edges }
    }

    /// `v <id> <tag> <x> <y>` lines, then `e <from> <to>` lines.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "v {i} {} {:x} {:x}", tag_name(v.slot), v.x, v.y);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(s, "e {a} {b}");
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LineClass {
    LL,
    LR,
    RL,
    RR,
}

impl LineClass {
    pub fn starts_left(self) -> bool {
        matches!(self, LineClass::LL | LineClass::LR)
    }

    pub fn ends_left(self) -> bool {
        matches!(self, LineClass::LL | LineClass::RL)
    }

    pub fn from_ends(start_left: bool, end_left: bool) -> LineClass {
        match (start_left, end_left) {
            (true, true) => LineClass::LL,
            (true, false) => LineClass::LR,
            (false, true) => LineClass::RL,
            (false, false) => LineClass::RR,
        }
    }

    /// Number of middle entries m has this parity.
    fn middle_parity(self) -> usize {
        if self.starts_left() == self.ends_left() {
            1
        } else {
            0
        }
    }

    pub const ALL: [LineClass; 4] = [LineClass::LL, LineClass::LR, LineClass::RL, LineClass::RR];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub vertices: Vec<usize>,
    pub class: Option<LineClass>,
    pub good: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineDecomposition {
    pub lines: Vec<Line>,
    /// False when some vertex has in- or out-degree above one or lies on a cycle.
    pub forest: bool,
}

impl LineDecomposition {
    pub fn is_good(&self) -> bool {
        self.forest && self.lines.iter().all(|l| l.good)
    }
}

pub fn decompose(graph: &DatabaseGraph, g: &GluedLayout) -> LineDecomposition {
    let nv = graph.vertices.len();
    let mut succ = vec![None; nv];
    let mut indeg = vec![0usize; nv];
    let mut forest = true;
    for &(a, b) in &graph.edges {
        if succ[a].is_some() {
            forest = false;
        }
        succ[a] = Some(b);
        indeg[b] += 1;
    }
    if indeg.iter().any(|&d| d > 1) {
        forest = false;
    }
    let mut seen = vec![false; nv];
    let mut lines = Vec::new();
    if forest {
        for s in 0..nv {
            if indeg[s] != 0 {
                continue;
            }
            let mut path = vec![s];
            seen[s] = true;
            let mut cur = s;
            while let Some(nx) = succ[cur] {
                path.push(nx);
                seen[nx] = true;
                cur = nx;
            }
            let (first, last) = (graph.vertices[path[0]], graph.vertices[*path.last().unwrap()]);
            let start_left = match first.slot {
                L1 => Some(true),
                R3 => Some(false),
                _ => None,
            };
            let end_left = match last.slot {
                L3 => Some(true),
                R1 => Some(false),
                _ => None,
            };
            let class = match (start_left, end_left) {
                (Some(a), Some(b)) if path.len() >= 3 => Some(LineClass::from_ends(a, b)),
                _ => None,
            };
            let lam = g.lambda;
            let good = class.is_some() && first.y >> lam == last.x >> lam;
            lines.push(Line { vertices: path, class, good });
        }
        // vertices left over lie on cycles
        if seen.iter().any(|s| !s) {
            forest = false;
        }
    }
    LineDecomposition { lines, forest }
}

pub fn is_good(db: &DbKey, g: &GluedLayout) -> bool {
    decompose(&DatabaseGraph::build(db, g), g).is_good()
}

/// The blue part 𝔮 = (class, x⃗, y⃗, w₁, w₂) of a chain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub class: LineClass,
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub w1: u64,
    pub w2: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Whether the shape is constructible: ℓ ≥ 2, |x⃗| = |y⃗| and the middle
    /// count has the parity the class demands.
    pub fn check(&self, g: &GluedLayout) -> Result<()> {
        let l = self.x.len();
        if l < 2 || self.y.len() != l {
            return Err(Error::NotParametrizable(format!("chain lengths {} and {}", l, self.y.len())));
        }
        if (l - 1) % 2 != self.class.middle_parity() {
            return Err(Error::NotParametrizable(format!("{:?} chain cannot have {} middles", self.class, l - 1)));
        }
        let (nm, lm) = (mask(g.n), mask(g.lambda));
        if self.x.iter().chain(&self.y).any(|&v| v & !nm != 0) || self.w1 & !lm != 0 || self.w2 & !lm != 0 {
            return Err(Error::WidthMismatch { expected: g.n as usize, got: 64 });
        }
        Ok(())
    }

    /// Entries (slot, x, y) of the chain for red labels r⃗ and z.
    pub fn entries(&self, r: &[u64], z: u64, g: &GluedLayout) -> Result<Vec<(u8, u64, u64)>> {
        self.check(g)?;
        let l = self.len();
        if r.len() != l {
            return Err(Error::NotParametrizable(format!("{} red labels for length {l}", r.len())));
        }
        let (n, lam) = (g.n, g.lambda);
        let ab = |hi: u64, lo: u64| (hi << lam) | lo;
        let bc = |hi: u64, lo: u64| (hi << n) | lo;
        let mut out = Vec::with_capacity(l + 1);
        let start = if self.class.starts_left() { L1 } else { R3 };
        out.push((start, ab(self.x[0], self.w1), ab(z, r[0])));
        let first_left = self.class.starts_left();
        for k in 1..l {
            let left = (k % 2 == 1) == first_left;
            let slot = if left { L2 } else { R2 };
            out.push((slot, bc(r[k - 1], self.x[k]), bc(r[k], self.y[k])));
        }
        let end = if self.class.ends_left() { L3 } else { R1 };
        out.push((end, ab(z, r[l - 1]), ab(self.y[0], self.w2)));
        Ok(out)
    }
}

/// A state structure parameter S̄.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoodParam(pub BTreeSet<Chain>);

impl GoodParam {
    pub fn new<I: IntoIterator<Item = Chain>>(chains: I) -> Self {
        GoodParam(chains.into_iter().collect())
    }

    pub fn count(&self) -> usize {
        self.0.len()
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|c| c.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Im(S̄): the w₂ labels.
    pub fn im(&self) -> BTreeSet<u64> {
        self.0.iter().map(|c| c.w2).collect()
    }

    /// |Im(S̄)| = count(S̄).
    pub fn is_good(&self) -> bool {
        self.im().len() == self.count()
    }

    pub fn with(&self, c: Chain) -> GoodParam {
        let mut s = self.clone();
        s.0.insert(c);
        s
    }

    pub fn without(&self, c: &Chain) -> GoodParam {
        let mut s = self.clone();
        s.0.remove(c);
        s
    }
}

/// Red labels of one chain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RedLabels {
    pub r: Vec<u64>,
    pub z: u64,
}

/// 𝔭⁻¹: the chains and red labels of a good database, chains in S̄ order.
pub fn parametrize(db: &DbKey, g: &GluedLayout) -> Result<(GoodParam, Vec<RedLabels>)> {
    let graph = DatabaseGraph::build(db, g);
    let dec = decompose(&graph, g);
    if !dec.forest {
        return Err(Error::NotParametrizable("not a linear forest".into()));
    }
    let (n, lam) = (g.n, g.lambda);
    let mut pairs = Vec::new();
    for line in &dec.lines {
        let class = match (line.class, line.good) {
            (Some(c), true) => c,
            _ => return Err(Error::NotParametrizable(format!("line of {} vertices is not good", line.vertices.len()))),
        };
        let vs: Vec<Vertex> = line.vertices.iter().map(|&i| graph.vertices[i]).collect();
        let l = vs.len() - 1;
        let (first, last) = (vs[0], vs[l]);
        let mut x = vec![first.x >> lam];
        let mut y = vec![last.y >> lam];
        let mut r = vec![first.y & mask(lam)];
        for v in &vs[1..l] {
            x.push(v.x & mask(n));
            y.push(v.y & mask(n));
            r.push(v.y >> n);
        }
        let chain = Chain { class, x, y, w1: first.x & mask(lam), w2: last.y & mask(lam) };
        chain.check(g)?;
        pairs.push((chain, RedLabels { r, z: first.y >> lam }));
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    let param = GoodParam::new(pairs.iter().map(|p| p.0.clone()));
    if param.count() != pairs.len() {
        return Err(Error::NotParametrizable("repeated chain".into()));
    }
    Ok((param, pairs.into_iter().map(|p| p.1).collect()))
}

/// 𝔾(S̄, R, Z) with labels listed in S̄ order.
pub fn unparametrize(s: &GoodParam, labels: &[RedLabels], g: &GluedLayout) -> Result<DbKey> {
    if labels.len() != s.count() {
        return Err(Error::NotParametrizable(format!("{} label sets for {} chains", labels.len(), s.count())));
    }
    let mut entries = Vec::new();
    for (c, lab) in s.0.iter().zip(labels) {
        entries.extend(c.entries(&lab.r, lab.z, g)?);
    }
    DbKey::from_entries(entries)
}

/// Whether a parametrized database lies in the support of |𝔊(S̄)⟩.
fn distinct_red(labels: &[RedLabels]) -> bool {
    let mut seen = BTreeSet::new();
    labels.iter().flat_map(|l| l.r.iter()).all(|r| seen.insert(*r))
}

/// Amplitude (2^{an} (2^λ)_b)^{-1/2} of every database in |𝔊(S̄)⟩.
pub fn good_amplitude(s: &GoodParam, g: &GluedLayout) -> Result<f64> {
    let (a, b) = (s.count() as i64, s.len() as i64);
    let k = 1i64 << g.lambda;
    if b > k {
        return Err(Error::DomainExhausted { slot: 0 });
    }
    let mut denom = 2f64.powi((a * g.n as i64) as i32);
    for i in 0..b {
        denom *= (k - i) as f64;
    }
    Ok(1.0 / denom.sqrt())
}

/// Ordered selections of `k` distinct values from `0..2^w` avoiding `avoid`.
pub fn distinct_tuples(w: u32, k: usize, avoid: &BTreeSet<u64>) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for v in 0..(1u64 << w) {
                if !avoid.contains(&v) && !t.contains(&v) {
                    let mut u = t.clone();
                    u.push(v);
                    next.push(u);
                }
            }
        }
        out = next;
    }
    out
}

/// All tuples of `k` values from `0..2^w`.
pub fn all_tuples(w: u32, k: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() << w);
        for t in &out {
            for v in 0..(1u64 << w) {
                let mut u = t.clone();
                u.push(v);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Support of |𝔊(S̄)⟩; each database carries [`good_amplitude`].
pub fn good_support(s: &GoodParam, g: &GluedLayout) -> Result<Vec<DbKey>> {
    if !s.is_good() {
        return Err(Error::NotGood);
    }
    for c in &s.0 {
        c.check(g)?;
    }
    good_amplitude(s, g)?;
    let (a, b) = (s.count(), s.len());
    let zs = all_tuples(g.n, a);
    let rs = distinct_tuples(g.lambda, b, &BTreeSet::new());
    let mut out = Vec::with_capacity(zs.len() * rs.len());
    for z in &zs {
        for r in &rs {
            let mut labels = Vec::with_capacity(a);
            let mut off = 0;
            for (i, c) in s.0.iter().enumerate() {
                labels.push(RedLabels { r: r[off..off + c.len()].to_vec(), z: z[i] });
                off += c.len();
            }
            out.push(unparametrize(s, &labels, g)?);
        }
    }
    Ok(out)
}

/// |sys⟩ ⊗ |𝔊(S̄)⟩.
pub fn good_state(sys: u64, s: &GoodParam, g: &GluedLayout) -> Result<PurifiedState> {
    let amp = C64::new(good_amplitude(s, g)?, 0.0);
    let mut psi = PurifiedState::new(g.system(), Arity::Sextuple);
    for db in good_support(s, g)? {
        psi.add(sys, db, amp);
    }
    Ok(psi)
}

/// Coefficients ⟨sys, 𝔊(S̄)|ψ⟩ for every pair with a nonzero overlap.
pub fn good_coefficients(psi: &PurifiedState, g: &GluedLayout) -> Result<Vec<((u64, GoodParam), C64)>> {
    let mut acc: FxHashMap<(u64, GoodParam), C64> = FxHashMap::default();
    let mut amp_cache: FxHashMap<GoodParam, f64> = FxHashMap::default();
    for ((sys, db), a) in psi.iter() {
        let Ok((s, labels)) = parametrize(db, g) else { continue };
        if !s.is_good() || !distinct_red(&labels) {
            continue;
        }
        let amp = match amp_cache.get(&s) {
            Some(v) => *v,
            None => {
                let v = good_amplitude(&s, g)?;
                amp_cache.insert(s.clone(), v);
                v
            }
        };
        *acc.entry((*sys, s)).or_insert(C64::new(0.0, 0.0)) += a * amp;
    }
    let mut v: Vec<_> = acc.into_iter().collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(v)
}

/// Π^Good ψ.
pub fn project_good(psi: &PurifiedState, g: &GluedLayout) -> Result<PurifiedState> {
    project_good_bounded(psi, g, usize::MAX)
}

/// Projection onto span{|sys⟩|𝔊(S̄)⟩ : len(S̄) ≤ max_len}.
pub fn project_good_bounded(psi: &PurifiedState, g: &GluedLayout, max_len: usize) -> Result<PurifiedState> {
    let mut out = psi.empty_like();
    for ((sys, s), c) in good_coefficients(psi, g)? {
        if s.len() > max_len {
            continue;
        }
        let amp = good_amplitude(&s, g)?;
        for db in good_support(&s, g)? {
            out.add(sys, db, c * amp);
        }
    }
    out.prune();
    Ok(out)
}

/// 𝔩: the extra chain ends in R₁; 𝔯: it ends in L₃.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Left,
    Right,
}

/// Parameters of one χ state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChiParams {
    pub family: Family,
    pub index: u8,
    pub base: GoodParam,
    /// Whether the extra chain starts in L₁ (the X of the class); ignored for index 3.
    pub start_left: bool,
    pub x: Vec<u64>,
    /// The fixed y entries, without the summed ones.
    pub y: Vec<u64>,
    pub w1: u64,
    /// C register for index 1, where the state does not act on C.
    pub c: u64,
}

impl ChiParams {
    fn class(&self) -> LineClass {
        let end_left = self.family == Family::Right;
        if self.index == 3 {
            LineClass::from_ends(end_left, end_left)
        } else {
            LineClass::from_ends(self.start_left, end_left)
        }
    }

    /// Whether the extra chain has a constructible shape.
    pub fn valid(&self, g: &GluedLayout) -> bool {
        let summed = if self.index == 1 { 1 } else { 2 };
        let ok_len = match self.index {
            1 => self.y.len() + 1 == self.x.len(),
            2 => self.y.len() + 2 == self.x.len() && self.x.len() >= 3,
            3 => self.y.is_empty() && self.x.len() == 2,
            _ => false,
        };
        if !ok_len || !self.base.is_good() {
            return false;
        }
        let c = Chain { class: self.class(), x: self.x.clone(), y: vec![0; self.y.len() + summed], w1: self.w1, w2: 0 };
        c.check(g).is_ok()
    }
}

/// χ^{family,index}: the last chain's summed outputs sit in the query register.
pub fn chi_state(p: &ChiParams, g: &GluedLayout) -> Result<PurifiedState> {
    if !p.valid(g) {
        return Err(Error::Invalid(format!("χ parameters {p:?}")));
    }
    let im = p.base.im();
    if im.len() == 1usize << g.lambda {
        return Err(Error::DomainExhausted { slot: 0 });
    }
    let free: Vec<u64> = (0..(1u64 << g.lambda)).filter(|w| !im.contains(w)).collect();
    let two = p.index != 1;
    let (n, lam) = (g.n, g.lambda);
    let norm = 2f64.powi((if two { 2 } else { 1 } * n) as i32) * free.len() as f64;
    let pre = C64::new(1.0 / norm.sqrt(), 0.0);
    let mut out = PurifiedState::new(g.system(), Arity::Sextuple);
    let ys1: Vec<u64> = if two { (0..(1u64 << n)).collect() } else { vec![p.c] };
    for y0 in 0..(1u64 << n) {
        for &w2 in &free {
            for &y1 in &ys1 {
                let mut y = vec![y0];
                y.extend(&p.y);
                if two {
                    y.push(y1);
                }
                let chain = Chain { class: p.class(), x: p.x.clone(), y, w1: p.w1, w2 };
                let s = p.base.with(chain);
                let sys = (((y0 << lam) | w2) << n) | y1;
                let sys = sys << g.ancilla;
                out.axpy(pre, &good_state(sys, &s, g)?);
            }
        }
    }
    out.prune();
    Ok(out)
}

/// Every chain of the given class and length over the layout's label widths.
pub fn enumerate_chains(g: &GluedLayout, class: LineClass, len: usize) -> Vec<Chain> {
    let mut out = Vec::new();
    if len < 2 || (len - 1) % 2 != class.middle_parity() {
        return out;
    }
    let xs = all_tuples(g.n, len);
    for x in &xs {
        for y in &xs {
            for w1 in 0..(1u64 << g.lambda) {
                for w2 in 0..(1u64 << g.lambda) {
                    out.push(Chain { class, x: x.clone(), y: y.clone(), w1, w2 });
                }
            }
        }
    }
    out
}

/// Good parameters with len(S̄) ≤ max_len (and ≤ 2^λ) and count(S̄) ≤ max_count.
pub fn enumerate_good_params(g: &GluedLayout, max_len: usize, max_count: usize) -> Vec<GoodParam> {
    let cap = max_len.min(1usize << g.lambda);
    let mut chains = Vec::new();
    for len in 2..=cap {
        for class in LineClass::ALL {
            chains.extend(enumerate_chains(g, class, len));
        }
    }
    let mut out = vec![GoodParam::default()];
    let mut frontier = vec![(GoodParam::default(), 0usize)];
    for _ in 0..max_count {
        let mut next = Vec::new();
        for (s, from) in &frontier {
            for (i, c) in chains.iter().enumerate().skip(*from) {
                if s.len() + c.len() > cap || s.im().contains(&c.w2) {
                    continue;
                }
                next.push((s.with(c.clone()), i + 1));
            }
        }
        out.extend(next.iter().map(|p| p.0.clone()));
        frontier = next;
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glued::{GluedOps, Variant};
    use crate::path_recording::{record, Half};

    fn lay(n: u32, lam: u32) -> GluedLayout {
        GluedLayout::new(n, lam, 0).unwrap()
    }

    fn ll(x: [u64; 2], y: [u64; 2], w1: u64, w2: u64) -> Chain {
        Chain { class: LineClass::LL, x: x.to_vec(), y: y.to_vec(), w1, w2 }
    }

    #[test]
    fn empty_database() {
        let g = lay(1, 1);
        let graph = DatabaseGraph::build(&DbKey::empty(), &g);
        assert!(graph.vertices.is_empty() && graph.edges.is_empty());
        assert!(is_good(&DbKey::empty(), &g));
        let (s, labels) = parametrize(&DbKey::empty(), &g).unwrap();
        assert!(s.is_empty() && labels.is_empty());
        let psi = good_state(0, &GoodParam::default(), &g).unwrap();
        assert_eq!(psi.len(), 1);
        assert!((psi.get(0, &DbKey::empty()) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_chain_display() {
        // L₁ = {(x₀‖w₁, z‖r₁)}, L₂ = {(r₁‖x₁, r₂‖y₁)}, L₃ = {(z‖r₂, y₀‖w₂)}
        let g = lay(1, 1);
        let (x0, w1, z, r1, x1, r2, y1, y0, w2) = (1, 0, 1, 0, 1, 1, 0, 0, 1);
        let db = DbKey::from_entries([(L1, (x0 << 1) | w1, (z << 1) | r1), (L2, (r1 << 1) | x1, (r2 << 1) | y1), (L3, (z << 1) | r2, (y0 << 1) | w2)])
            .unwrap();
        let graph = DatabaseGraph::build(&db, &g);
        assert_eq!(graph.vertices.len(), 3);
        assert_eq!(graph.edges.len(), 2);
        let dec = decompose(&graph, &g);
        assert!(dec.is_good());
        assert_eq!(dec.lines[0].class, Some(LineClass::LL));
        let (s, labels) = parametrize(&db, &g).unwrap();
        assert_eq!(s, GoodParam::new([ll([x0, x1], [y0, y1], w1, w2)]));
        assert_eq!(labels, vec![RedLabels { r: vec![r1, r2], z }]);
        assert_eq!(unparametrize(&s, &labels, &g).unwrap(), db);
        assert!(graph.dump().contains("v 0 l1 2 2"));
    }

    #[test]
    fn two_chains_and_counterexample() {
        let g = lay(1, 2);
        let a = ll([0, 1], [1, 0], 2, 3);
        let b = Chain { class: LineClass::RR, x: vec![1, 1], y: vec![0, 1], w1: 1, w2: 0 };
        let s = GoodParam::new([a.clone(), b]);
        let labels = vec![RedLabels { r: vec![0, 1], z: 1 }, RedLabels { r: vec![2, 3], z: 0 }];
        let db = unparametrize(&s, &labels, &g).unwrap();
        let dec = decompose(&DatabaseGraph::build(&db, &g), &g);
        assert!(dec.is_good());
        assert_eq!(dec.lines.len(), 2);
        // a second L₂ entry reading r₁ gives the L₁ vertex out-degree two
        let bad = db.with(L2, 1 << 1, (2 << 1) | 1).unwrap();
        let dec = decompose(&DatabaseGraph::build(&bad, &g), &g);
        assert!(!dec.forest);
        assert!(parametrize(&bad, &g).is_err());
    }

    #[test]
    fn round_trip_on_small_good_databases() {
        let g = lay(1, 1);
        let params = enumerate_good_params(&g, 4, 2);
        let mut checked = 0;
        for s in &params {
            for db in good_support(s, &g).unwrap() {
                let (s2, labels) = parametrize(&db, &g).unwrap();
                assert_eq!(&s2, s);
                assert_eq!(unparametrize(&s2, &labels, &g).unwrap(), db);
                checked += 1;
            }
        }
        // ∅ plus 128 length-2 chains, each with 2 z values and 2 ordered r pairs
        assert_eq!(params.len(), 129);
        assert_eq!(checked, 1 + 128 * 4);
    }

    #[test]
    fn good_state_normalization_and_orthogonality() {
        let g = lay(1, 1);
        let s = GoodParam::new([ll([0, 0], [1, 1], 0, 1)]);
        assert!((good_amplitude(&s, &g).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(good_support(&s, &g).unwrap().len(), 4);
        let params = enumerate_good_params(&g, 4, 2);
        let states: Vec<_> = params.iter().map(|p| good_state(0, p, &g).unwrap()).collect();
        for i in 0..states.len() {
            assert!((states[i].norm() - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(states[i].inner(&states[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn project_good_examples() {
        let g = lay(1, 2);
        let s = GoodParam::new([ll([0, 1], [1, 0], 2, 3)]);
        let psi = good_state(5, &s, &g).unwrap();
        assert!(project_good(&psi, &g).unwrap().distance(&psi) < 1e-12);
        // a single basis database of the chain projects onto the good state
        let one = PurifiedState::basis(g.system(), Arity::Sextuple, 5, good_support(&s, &g).unwrap()[3].clone());
        let p = project_good(&one, &g).unwrap();
        assert!((p.norm() - good_amplitude(&s, &g).unwrap()).abs() < 1e-12);
        assert!(project_good(&p, &g).unwrap().distance(&p) < 1e-12);
        let bad = DbKey::from_entries([(L1, 0, 0), (L2, 0, 0)]).unwrap();
        let psi = PurifiedState::basis(g.system(), Arity::Sextuple, 0, bad);
        assert!(project_good(&psi, &g).unwrap().is_empty());
    }

    fn chi(family: Family, index: u8, base: GoodParam, start_left: bool, x: Vec<u64>, y: Vec<u64>, w1: u64, c: u64) -> ChiParams {
        ChiParams { family, index, base, start_left, x, y, w1, c }
    }

    #[test]
    fn chi_states_are_orthonormal() {
        let g = lay(1, 2);
        for family in [Family::Left, Family::Right] {
            let mut states = Vec::new();
            for x0 in 0..2 {
                for w1 in 0..4 {
                    // length 2 must start on the end's side, length 3 on the other
                    let same = family == Family::Right;
                    for (start_left, x, y) in [(same, vec![x0, 1], vec![0]), (!same, vec![x0, 0, 1], vec![1, 1])] {
                        let p = chi(family, 1, GoodParam::default(), start_left, x, y, w1, 0);
                        states.push(chi_state(&p, &g).unwrap());
                    }
                }
            }
            for i in 0..states.len() {
                assert!((states[i].norm() - 1.0).abs() < 1e-10);
                for j in 0..i {
                    assert!(states[i].inner(&states[j]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn triple_right_product_gives_chi_three() {
        let g = lay(1, 2);
        let ops = GluedOps::new(g, Variant::Mid).unwrap();
        let bases = [GoodParam::default(), GoodParam::new([ll([1, 0], [0, 1], 1, 2)])];
        for base in bases {
            for (x0, w1, x1) in [(0, 0, 0), (1, 3, 0), (0, 2, 1)] {
                let sys = (((x0 << 2) | w1) << 1) | x1;
                let psi = good_state(sys, &base, &g).unwrap();
                let mut out = psi.clone();
                for i in [3, 2, 1] {
                    out = record(&out, ops.rule(i, Half::R)).unwrap();
                }
                let want = chi_state(&chi(Family::Left, 3, base.clone(), false, vec![x0, x1], vec![], w1, 0), &g).unwrap();
                assert!(out.distance(&want) < 1e-10);
                let mut out = psi.clone();
                for i in [1, 2, 3] {
                    out = record(&out, ops.rule(i, Half::L)).unwrap();
                }
                let want = chi_state(&chi(Family::Right, 3, base.clone(), true, vec![x0, x1], vec![], w1, 0), &g).unwrap();
                assert!(out.distance(&want) < 1e-10);
            }
        }
    }
}
