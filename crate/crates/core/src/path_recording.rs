//! Purified lazy simulation of a Haar oracle by path recording.
//!
//! A [`PurifiedState`] is a sparse map from (system basis string, database) to
//! amplitude. The system string holds the query register in its high bits and
//! the adversary ancilla in its low bits. Databases are tuples of relations
//! stored as one sorted list of packed `(slot, x, y)` entries.
//!
//! Every operator here is an instance of one insertion rule: read a window of
//! the system, pick an admissible output `y`, write it back and record the
//! pair in one slot. The adjoint removes a recorded pair whose output sits in
//! the window, provided `y` was admissible for the smaller database.

use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, DensityMatrix, C64, ZERO};
use crate::relations::{mask, Relation};
use nalgebra::DMatrix;
use rustc_hash::FxHashMap;
use serde::Serialize;
use smallvec::SmallVec;
use std::sync::Arc;

/// Amplitudes below this magnitude are dropped after every operator.
pub const PRUNE: f64 = 1e-12;

const VAL_BITS: u32 = 13;
const SLOT_SHIFT: u32 = 2 * VAL_BITS;
/// Widest string a slot can hold.
pub const MAX_WIDTH: u32 = VAL_BITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Arity {
    /// ⟨L, R⟩
    Single,
    /// ⟨L₁, R₁, L₂, R₂, L₃, R₃⟩
    Sextuple,
}

impl Arity {
    pub fn slots(self) -> u8 {
        match self {
            Arity::Single => 2,
            Arity::Sextuple => 6,
        }
    }
}

/// What an insertion does when no output is admissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Saturation {
    /// Raise [`Error::DomainExhausted`].
    Strict,
    /// The operator maps the term to zero.
    Vanish,
}

/// Query register (high bits) followed by an ancilla (low bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SystemLayout {
    pub query: u32,
    pub ancilla: u32,
}

impl SystemLayout {
    pub fn new(query: u32, ancilla: u32) -> Self {
        SystemLayout { query, ancilla }
    }

    pub fn total(&self) -> u32 {
        self.query + self.ancilla
    }

    pub fn dim(&self) -> usize {
        1usize << self.total()
    }
}

/// Canonical database: sorted packed entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DbKey(SmallVec<[u32; 8]>);

impl DbKey {
    pub fn empty() -> Self {
        DbKey(SmallVec::new())
    }

    fn pack(slot: u8, x: u64, y: u64) -> u32 {
        debug_assert!(x < 1 << VAL_BITS && y < 1 << VAL_BITS);
        ((slot as u32) << SLOT_SHIFT) | ((x as u32) << VAL_BITS) | y as u32
    }

    fn unpack(e: u32) -> (u8, u64, u64) {
        ((e >> SLOT_SHIFT) as u8, ((e >> VAL_BITS) & ((1 << VAL_BITS) - 1)) as u64, (e & ((1 << VAL_BITS) - 1)) as u64)
    }

    pub fn from_entries<I: IntoIterator<Item = (u8, u64, u64)>>(entries: I) -> Result<Self> {
        let mut d = DbKey::empty();
        for (s, x, y) in entries {
            d = d.with(s, x, y)?;
        }
        Ok(d)
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u8, u64, u64)> + '_ {
        self.0.iter().map(|&e| Self::unpack(e))
    }

    fn slot_range(&self, slot: u8) -> &[u32] {
        let lo = (slot as u32) << SLOT_SHIFT;
        let hi = (slot as u32 + 1) << SLOT_SHIFT;
        let a = self.0.partition_point(|&e| e < lo);
        let b = self.0.partition_point(|&e| e < hi);
        &self.0[a..b]
    }

    pub fn slot(&self, slot: u8) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.slot_range(slot).iter().map(|&e| {
            let (_, x, y) = Self::unpack(e);
            (x, y)
        })
    }

    pub fn slot_len(&self, slot: u8) -> usize {
        self.slot_range(slot).len()
    }

    pub fn contains(&self, slot: u8, x: u64, y: u64) -> bool {
        self.0.binary_search(&Self::pack(slot, x, y)).is_ok()
    }

    /// Insert a pair; an existing identical pair is an invariant error.
    pub fn with(&self, slot: u8, x: u64, y: u64) -> Result<DbKey> {
        if x >> VAL_BITS != 0 || y >> VAL_BITS != 0 {
            return Err(Error::WidthMismatch { expected: VAL_BITS as usize, got: 64 });
        }
        let e = Self::pack(slot, x, y);
        match self.0.binary_search(&e) {
            Ok(_) => Err(Error::DuplicatePair { slot, x, y }),
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, e);
                Ok(DbKey(v))
            }
        }
    }

    pub fn without(&self, slot: u8, x: u64, y: u64) -> DbKey {
        let e = Self::pack(slot, x, y);
        let mut v = self.0.clone();
        if let Ok(pos) = v.binary_search(&e) {
            v.remove(pos);
        }
        DbKey(v)
    }

    pub fn relation(&self, slot: u8, in_width: u32, out_width: u32) -> Relation {
        let pairs: Vec<(u64, u64)> = self.slot(slot).collect();
        Relation::from_pairs(in_width, out_width, &pairs).expect("canonical database")
    }

    pub fn from_relations(rels: &[Relation]) -> Result<DbKey> {
        let mut entries = Vec::new();
        for (s, r) in rels.iter().enumerate() {
            for &(x, y) in r.pairs() {
                entries.push((s as u8, x, y));
            }
        }
        DbKey::from_entries(entries)
    }

    /// `{..}|{..}` with one relation per slot.
    pub fn text(&self, arity: Arity) -> String {
        (0..arity.slots())
            .map(|s| {
                let body: Vec<String> = self.slot(s).map(|(x, y)| format!("({x:x},{y:x})")).collect();
                format!("{{{}}}", body.join(","))
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// A contiguous bit range of the query register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub shift: u32,
    pub width: u32,
}

impl Window {
    #[inline]
    pub fn read(self, sys: u64, anc: u32) -> u64 {
        (sys >> (self.shift + anc)) & mask(self.width)
    }

    #[inline]
    pub fn clear(self, sys: u64, anc: u32) -> u64 {
        sys & !(mask(self.width) << (self.shift + anc))
    }

    #[inline]
    pub fn put(self, rest: u64, v: u64, anc: u32) -> u64 {
        rest | (v << (self.shift + anc))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    In,
    Out,
}

/// Bits `[shift, shift+width)` of the input or output of every pair in `slot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Source {
    pub slot: u8,
    pub side: Side,
    pub shift: u32,
    pub width: u32,
}

/// Outputs whose target bits avoid every value drawn from the sources.
/// With the target spanning the window this is plain set exclusion.
#[derive(Clone, Debug)]
pub struct ExclusionRule {
    pub slot: u8,
    pub window: Window,
    pub sources: SmallVec<[Source; 6]>,
    pub target_shift: u32,
    pub target_width: u32,
}

impl ExclusionRule {
    pub fn forbidden(&self, db: &DbKey) -> SmallVec<[u64; 16]> {
        let mut f: SmallVec<[u64; 16]> = SmallVec::new();
        for s in &self.sources {
            for (x, y) in db.slot(s.slot) {
                let v = match s.side {
                    Side::In => x,
                    Side::Out => y,
                };
                let part = (v >> s.shift) & mask(s.width);
                if !f.contains(&part) {
                    f.push(part);
                }
            }
        }
        f
    }

    fn target(&self, y: u64) -> u64 {
        (y >> self.target_shift) & mask(self.target_width)
    }

    pub fn count(&self, db: &DbKey) -> usize {
        let f = self.forbidden(db).len();
        let free = (1usize << self.target_width).saturating_sub(f);
        free << (self.window.width - self.target_width)
    }
}

/// One insertion rule: which slot, which window, which outputs.
pub trait Recorder {
    fn slot(&self) -> u8;
    fn window(&self) -> Window;
    /// Admissible outputs for window value `x`, rest of system `z`.
    fn admissible(&self, x: u64, z: u64, db: &DbKey, out: &mut Vec<u64>) -> Result<()>;
    /// Whether `y` is admissible, and how many outputs are.
    fn admits(&self, x: u64, z: u64, db: &DbKey, y: u64) -> Result<(bool, usize)>;
}

impl Recorder for ExclusionRule {
    fn slot(&self) -> u8 {
        self.slot
    }

    fn window(&self) -> Window {
        self.window
    }

    fn admissible(&self, _x: u64, _z: u64, db: &DbKey, out: &mut Vec<u64>) -> Result<()> {
        out.clear();
        let f = self.forbidden(db);
        for y in 0..(1u64 << self.window.width) {
            if !f.contains(&self.target(y)) {
                out.push(y);
            }
        }
        Ok(())
    }

    fn admits(&self, _x: u64, _z: u64, db: &DbKey, y: u64) -> Result<(bool, usize)> {
        let f = self.forbidden(db);
        Ok((!f.contains(&self.target(y)), self.count(db)))
    }
}

type Membership = dyn Fn(u64, u64, &DbKey, u64) -> bool + Send + Sync;
type Cardinality = dyn Fn(u64, u64, &DbKey) -> usize + Send + Sync;

/// A caller-supplied output set f(x, z, L, R) with its exact cardinality.
#[derive(Clone)]
pub struct OutputRule {
    pub contains: Arc<Membership>,
    pub cardinality: Arc<Cardinality>,
}

impl OutputRule {
    pub fn new(contains: Arc<Membership>, cardinality: Arc<Cardinality>) -> Self {
        OutputRule { contains, cardinality }
    }

    pub fn from_exclusion(rule: ExclusionRule) -> Self {
        let r1 = rule.clone();
        let r2 = rule;
        OutputRule {
            contains: Arc::new(move |_, _, db, y| !r1.forbidden(db).contains(&r1.target(y))),
            cardinality: Arc::new(move |_, _, db| r2.count(db)),
        }
    }
}

/// Cardinalities are cross-checked by enumeration up to this many outputs.
pub const ENUMERATION_CHECK: u64 = 1 << 10;

struct General<'a> {
    slot: u8,
    window: Window,
    rule: &'a OutputRule,
}

impl Recorder for General<'_> {
    fn slot(&self) -> u8 {
        self.slot
    }

    fn window(&self) -> Window {
        self.window
    }

    fn admissible(&self, x: u64, z: u64, db: &DbKey, out: &mut Vec<u64>) -> Result<()> {
        out.clear();
        let n = 1u64 << self.window.width;
        for y in 0..n {
            if (self.rule.contains)(x, z, db, y) {
                if db.slot(self.slot).any(|(_, yy)| yy == y) {
                    return Err(Error::ContractViolation(format!(
                        "x={x:#x} z={z:#x} db={} outputs y={y:#x} already in the image",
                        db.text(Arity::Single)
                    )));
                }
                out.push(y);
            }
        }
        if n <= ENUMERATION_CHECK {
            let c = (self.rule.cardinality)(x, z, db);
            if c != out.len() {
                return Err(Error::ContractViolation(format!(
                    "x={x:#x} z={z:#x} db={} cardinality {c} but {} members",
                    db.text(Arity::Single),
                    out.len()
                )));
            }
        }
        Ok(())
    }

    fn admits(&self, x: u64, z: u64, db: &DbKey, y: u64) -> Result<(bool, usize)> {
        Ok(((self.rule.contains)(x, z, db, y), (self.rule.cardinality)(x, z, db)))
    }
}

/// Joint adversary and database state.
#[derive(Clone, Debug)]
pub struct PurifiedState {
    pub layout: SystemLayout,
    pub arity: Arity,
    pub budget: usize,
    pub saturation: Saturation,
    amps: FxHashMap<(u64, DbKey), C64>,
}

#[derive(Serialize)]
struct DumpEntry {
    system: String,
    db: String,
    re: f64,
    im: f64,
}

impl PurifiedState {
    pub fn new(layout: SystemLayout, arity: Arity) -> Self {
        PurifiedState { layout, arity, budget: usize::MAX, saturation: Saturation::Strict, amps: FxHashMap::default() }
    }

    pub fn basis(layout: SystemLayout, arity: Arity, sys: u64, db: DbKey) -> Self {
        let mut s = Self::new(layout, arity);
        s.add(sys, db, C64::new(1.0, 0.0));
        s
    }

    pub fn with_budget(mut self, t: usize) -> Self {
        self.budget = t;
        self
    }

    pub fn with_saturation(mut self, s: Saturation) -> Self {
        self.saturation = s;
        self
    }

    /// Same parameters, no amplitudes.
    pub fn empty_like(&self) -> Self {
        PurifiedState {
            layout: self.layout,
            arity: self.arity,
            budget: self.budget,
            saturation: self.saturation,
            amps: FxHashMap::default(),
        }
    }

    pub fn add(&mut self, sys: u64, db: DbKey, a: C64) {
        *self.amps.entry((sys, db)).or_insert(ZERO) += a;
    }

    pub fn get(&self, sys: u64, db: &DbKey) -> C64 {
        // the map is keyed by owned pairs
        self.amps.get(&(sys, db.clone())).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, DbKey), &C64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PurifiedState) -> C64 {
        let (small, big, flip) = if self.len() <= other.len() { (self, other, false) } else { (other, self, true) };
        let mut s = ZERO;
        for (k, a) in &small.amps {
            if let Some(b) = big.amps.get(k) {
                s += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        s
    }

    pub fn axpy(&mut self, c: C64, other: &PurifiedState) {
        for (k, a) in &other.amps {
            *self.amps.entry(k.clone()).or_insert(ZERO) += c * a;
        }
    }

    pub fn plus(&self, other: &PurifiedState) -> PurifiedState {
        let mut s = self.clone();
        s.axpy(C64::new(1.0, 0.0), other);
        s.prune();
        s
    }

    pub fn minus(&self, other: &PurifiedState) -> PurifiedState {
        let mut s = self.clone();
        s.axpy(C64::new(-1.0, 0.0), other);
        s.prune();
        s
    }

    pub fn scaled(&self, c: C64) -> PurifiedState {
        let mut s = self.empty_like();
        for (k, a) in &self.amps {
            s.amps.insert(k.clone(), a * c);
        }
        s
    }

    pub fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= PRUNE);
    }

    /// Entries in canonical order.
    pub fn sorted(&self) -> Vec<((u64, DbKey), C64)> {
        let mut v: Vec<_> = self.amps.iter().map(|(k, a)| (k.clone(), *a)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn max_db_size(&self) -> usize {
        self.amps.keys().map(|k| k.1.size()).max().unwrap_or(0)
    }

    /// Distance ‖self − other‖.
    pub fn distance(&self, other: &PurifiedState) -> f64 {
        let mut d = self.clone();
        d.axpy(C64::new(-1.0, 0.0), other);
        d.norm()
    }

    /// System density matrix after tracing out the databases.
    pub fn reduced_density(&self) -> Result<DensityMatrix> {
        let dim = self.layout.dim();
        if self.layout.total() > 12 {
            return Err(Error::TooLarge { what: "system register".into(), size: dim, cap: 1 << 12 });
        }
        let mut by_db: FxHashMap<&DbKey, Vec<(usize, C64)>> = FxHashMap::default();
        for ((s, db), a) in &self.amps {
            by_db.entry(db).or_default().push((*s as usize, *a));
        }
        let mut rho = DMatrix::from_element(dim, dim, ZERO);
        for v in by_db.values() {
            for &(i, a) in v {
                for &(j, b) in v {
                    rho[(i, j)] += a * b.conj();
                }
            }
        }
        Ok(rho)
    }

    /// Apply a dense unitary on the whole system register.
    pub fn apply_system(&self, u: &DenseOperator) -> Result<PurifiedState> {
        let dim = self.layout.dim();
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::DimensionMismatch(u.nrows(), dim));
        }
        let mut by_db: FxHashMap<&DbKey, Vec<(usize, C64)>> = FxHashMap::default();
        for ((s, db), a) in &self.amps {
            by_db.entry(db).or_default().push((*s as usize, *a));
        }
        let mut dbs: Vec<_> = by_db.into_iter().collect();
        dbs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = self.empty_like();
        for (db, v) in dbs {
            let mut acc = vec![ZERO; dim];
            for &(j, a) in &v {
                for (i, slot) in acc.iter_mut().enumerate() {
                    *slot += u[(i, j)] * a;
                }
            }
            for (i, a) in acc.into_iter().enumerate() {
                if a.norm() >= PRUNE {
                    out.amps.insert((i as u64, db.clone()), a);
                }
            }
        }
        Ok(out)
    }

    /// JSON list of {system, db, re, im} in canonical order.
    pub fn to_json(&self) -> String {
        let hexw = self.layout.total().div_ceil(4).max(1) as usize;
        let entries: Vec<DumpEntry> = self
            .sorted()
            .into_iter()
            .map(|((s, db), a)| DumpEntry {
                system: format!("{s:0hexw$x}"),
                db: db.text(self.arity),
                re: a.re,
                im: a.im,
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("serializable")
    }
}

/// Insert a pair: Σ_y |f|^{-1/2} |y⟩|D ∪ {(x,y)}⟩.
pub fn record<R: Recorder + ?Sized>(psi: &PurifiedState, rule: &R) -> Result<PurifiedState> {
    let anc = psi.layout.ancilla;
    let w = rule.window();
    let slot = rule.slot();
    let mut out = psi.empty_like();
    let mut buf = Vec::new();
    for ((sys, db), a) in psi.iter() {
        let x = w.read(*sys, anc);
        let z = w.clear(*sys, anc);
        rule.admissible(x, z, db, &mut buf)?;
        if buf.is_empty() {
            match psi.saturation {
                Saturation::Strict => return Err(Error::DomainExhausted { slot }),
                Saturation::Vanish => continue,
            }
        }
        if db.size() + 1 > psi.budget {
            return Err(Error::BudgetExceeded { size: db.size() + 1, budget: psi.budget });
        }
        let c = a / (buf.len() as f64).sqrt();
        for &y in &buf {
            out.add(w.put(z, y, anc), db.with(slot, x, y)?, c);
        }
    }
    out.prune();
    Ok(out)
}

/// Adjoint of [`record`].
pub fn unrecord<R: Recorder + ?Sized>(psi: &PurifiedState, rule: &R) -> Result<PurifiedState> {
    let anc = psi.layout.ancilla;
    let w = rule.window();
    let slot = rule.slot();
    let mut out = psi.empty_like();
    for ((sys, db), a) in psi.iter() {
        let y = w.read(*sys, anc);
        let z = w.clear(*sys, anc);
        for (x, yy) in db.slot(slot) {
            if yy != y {
                continue;
            }
            let pred = db.without(slot, x, y);
            let (ok, count) = rule.admits(x, z, &pred, y)?;
            if ok && count > 0 {
                out.add(w.put(z, x, anc), pred, a / (count as f64).sqrt());
            }
        }
    }
    out.prune();
    Ok(out)
}

/// V = V_L(I − V_R V_R†) + (I − V_L V_L†) V_R†.
pub fn two_sided(psi: &PurifiedState, l: &dyn Recorder, r: &dyn Recorder) -> Result<PurifiedState> {
    let a = unrecord(psi, r)?;
    let pr = record(&a, r)?;
    let t1 = record(&psi.minus(&pr), l)?;
    let pl = record(&unrecord(&a, l)?, l)?;
    Ok(t1.plus(&a.minus(&pl)))
}

/// V† = (I − V_R V_R†) V_L† + V_R (I − V_L V_L†).
pub fn two_sided_dag(psi: &PurifiedState, l: &dyn Recorder, r: &dyn Recorder) -> Result<PurifiedState> {
    let c = unrecord(psi, l)?;
    let t1 = c.minus(&record(&unrecord(&c, r)?, r)?);
    let pl = record(&c, l)?;
    let t2 = record(&psi.minus(&pl), r)?;
    Ok(t1.plus(&t2))
}

fn require(psi: &PurifiedState, arity: Arity) -> Result<()> {
    if psi.arity != arity {
        return Err(Error::ArityMismatch);
    }
    if psi.layout.query > MAX_WIDTH {
        return Err(Error::WidthMismatch { expected: MAX_WIDTH as usize, got: psi.layout.query as usize });
    }
    Ok(())
}

pub const L: u8 = 0;
pub const R: u8 = 1;

fn full(layout: SystemLayout) -> Window {
    Window { shift: 0, width: layout.query }
}

fn src(slot: u8, side: Side, shift: u32, width: u32) -> Source {
    Source { slot, side, shift, width }
}

fn whole(slot: u8, window: Window, sources: &[(u8, Side)]) -> ExclusionRule {
    ExclusionRule {
        slot,
        window,
        sources: sources.iter().map(|&(s, d)| src(s, d, 0, window.width)).collect(),
        target_shift: 0,
        target_width: window.width,
    }
}

/// Forward-only rule: exclude Im(R) and store in slot 0.
pub fn pr_rule(layout: SystemLayout) -> ExclusionRule {
    whole(0, full(layout), &[(0, Side::Out)])
}

/// Exclude Im(L ∪ R⁻¹) = Im(L) ∪ Dom(R).
pub fn vl_rule(layout: SystemLayout) -> ExclusionRule {
    whole(L, full(layout), &[(L, Side::Out), (R, Side::In)])
}

/// Exclude Dom(L ∪ R⁻¹) = Dom(L) ∪ Im(R).
pub fn vr_rule(layout: SystemLayout) -> ExclusionRule {
    whole(R, full(layout), &[(L, Side::In), (R, Side::Out)])
}

/// Exclude outputs whose middle λ bits occur in Im(L ∪ R)^𝔪.
pub fn w_rule(layout: SystemLayout, n: u32, lambda: u32, slot: u8) -> Result<ExclusionRule> {
    if layout.query != 2 * n + lambda {
        return Err(Error::WidthMismatch { expected: (2 * n + lambda) as usize, got: layout.query as usize });
    }
    Ok(ExclusionRule {
        slot,
        window: full(layout),
        sources: [src(L, Side::Out, n, lambda), src(R, Side::Out, n, lambda)].into_iter().collect(),
        target_shift: n,
        target_width: lambda,
    })
}

pub fn apply_pr(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    record(psi, &pr_rule(psi.layout))
}

pub fn apply_vl(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    record(psi, &vl_rule(psi.layout))
}

pub fn apply_vr(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    record(psi, &vr_rule(psi.layout))
}

pub fn apply_vl_dag(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    unrecord(psi, &vl_rule(psi.layout))
}

pub fn apply_vr_dag(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    unrecord(psi, &vr_rule(psi.layout))
}

pub fn apply_v(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    two_sided(psi, &vl_rule(psi.layout), &vr_rule(psi.layout))
}

pub fn apply_v_dag(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    two_sided_dag(psi, &vl_rule(psi.layout), &vr_rule(psi.layout))
}

/// The alternative presentation Π^L V_L (I − Π^R) + (I − Π^L) V_R† Π^R.
pub fn apply_v_projected(psi: &PurifiedState) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    let (l, r) = (vl_rule(psi.layout), vr_rule(psi.layout));
    let proj_l = |s: &PurifiedState| -> Result<PurifiedState> { record(&unrecord(s, &l)?, &l) };
    let proj_r = |s: &PurifiedState| -> Result<PurifiedState> { record(&unrecord(s, &r)?, &r) };
    let pr = proj_r(psi)?;
    let t1 = proj_l(&record(&psi.minus(&pr), &l)?)?;
    let u = unrecord(&pr, &r)?;
    let t2 = u.minus(&proj_l(&u)?);
    Ok(t1.plus(&t2))
}

pub fn apply_w_mid(psi: &PurifiedState, n: u32, lambda: u32) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    two_sided(psi, &w_rule(psi.layout, n, lambda, L)?, &w_rule(psi.layout, n, lambda, R)?)
}

pub fn apply_w_mid_dag(psi: &PurifiedState, n: u32, lambda: u32) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    two_sided_dag(psi, &w_rule(psi.layout, n, lambda, L)?, &w_rule(psi.layout, n, lambda, R)?)
}

/// Which half of a two-sided operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    L,
    R,
}

/// W_L, W_R or their adjoints.
pub fn apply_w_half(psi: &PurifiedState, n: u32, lambda: u32, half: Half, dagger: bool) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    let rule = w_rule(psi.layout, n, lambda, if half == Half::L { L } else { R })?;
    if dagger {
        unrecord(psi, &rule)
    } else {
        record(psi, &rule)
    }
}

fn general<'a>(psi: &PurifiedState, slot: u8, f: &'a OutputRule) -> General<'a> {
    General { slot, window: full(psi.layout), rule: f }
}

/// V^{f_L, f_R}; requires f_L ⊆ [N]∖Im(L), f_R ⊆ [N]∖Im(R).
pub fn apply_v_general(psi: &PurifiedState, f_l: &OutputRule, f_r: &OutputRule) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    two_sided(psi, &general(psi, L, f_l), &general(psi, R, f_r))
}

pub fn apply_v_general_dag(psi: &PurifiedState, f_l: &OutputRule, f_r: &OutputRule) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    two_sided_dag(psi, &general(psi, L, f_l), &general(psi, R, f_r))
}

/// One half of V^{f_L, f_R}, or its adjoint.
pub fn apply_general_half(psi: &PurifiedState, f: &OutputRule, half: Half, dagger: bool) -> Result<PurifiedState> {
    require(psi, Arity::Single)?;
    let g = general(psi, if half == Half::L { L } else { R }, f);
    if dagger {
        unrecord(psi, &g)
    } else {
        record(psi, &g)
    }
}

/// All single-arity databases with |L| + |R| ≤ t whose relations are
/// injective in both coordinates, in canonical order.
pub fn enumerate_single_dbs(width: u32, t: usize) -> Vec<DbKey> {
    let n = 1u64 << width;
    let mut out = vec![DbKey::empty()];
    let mut frontier = vec![DbKey::empty()];
    for _ in 0..t {
        let mut next = Vec::new();
        for db in &frontier {
            // extend only past the last entry so each set is built once
            let last = db.0.last().copied();
            for slot in [L, R] {
                for x in 0..n {
                    if db.slot(slot).any(|(xx, _)| xx == x) {
                        continue;
                    }
                    for y in 0..n {
                        if db.slot(slot).any(|(_, yy)| yy == y) {
                            continue;
                        }
                        let e = DbKey::pack(slot, x, y);
                        if last.is_some_and(|l| e <= l) {
                            continue;
                        }
                        let nd = db.with(slot, x, y).expect("fresh pair");
                        next.push(nd);
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out
}
