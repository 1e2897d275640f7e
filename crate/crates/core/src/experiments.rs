//! Named, reproducible checks. Each check returns an [`ExperimentReport`]
//! carrying its anchor, parameters, value, bound and verdict; suites group
//! them, and [`REGISTRY`] ties every anchor to the suite that covers it.

use crate::error::{Error, Result};
use crate::glued::{GluedLayout, GluedOps, ProjectorTag, Variant, L1, L2, L3, R1, R2, R3};
use crate::haar_oracle::{
    max_entries, batch_mean, flip_attack_glued, flip_attack_haar, hybrid_distance, hybrid_output, mc_twirl, weingarten_twirl,
    AdversaryCircuit, Hybrid, BATCHES,
};
use crate::linalg::{
    haar_sample, haar_sample_with, partial_trace, pure_density, trace_distance, ColumnSet, DenseOperator, RegisterLayout,
    C64, ZERO,
};
use crate::path_recording::{
    apply_pr, apply_v, apply_w_mid, enumerate_single_dbs, record, unrecord, w_rule,
    Arity, DbKey, Half, PurifiedState, Saturation, SystemLayout,
};
use crate::simulator::{good_residual, induction, random_good_param, Direction, ExactPiece, Simulator};
use crate::stretch::{brickwork_chain, stretch_advantage, stretch_hybrid_step, stretch_pru, xuxux, StretchKeys};
use crate::structure::{
    chi_state, enumerate_good_params, good_state, project_good, ChiParams, Family, GoodParam,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// Parameters shared by a suite run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub lambda: u32,
    pub t: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params { n: 1, lambda: 1, t: 1, samples: 200, seed: 7 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub lemma_id: String,
    pub anchor: String,
    pub n: u32,
    pub lambda: u32,
    pub t: usize,
    pub samples: usize,
    pub seed: u64,
    pub value: f64,
    /// The bound as a formula in n, λ, t (and recorded constants).
    pub bound_expr: String,
    pub bound: f64,
    pub tolerance: f64,
    pub status: Status,
    pub ms: u128,
    pub note: String,
}

impl ExperimentReport {
    fn new(lemma_id: &str, anchor: &str, p: Params) -> Self {
        ExperimentReport {
            lemma_id: lemma_id.into(),
            anchor: anchor.into(),
            n: p.n,
            lambda: p.lambda,
            t: p.t,
            samples: p.samples,
            seed: p.seed,
            value: f64::NAN,
            bound_expr: String::new(),
            bound: f64::NAN,
            tolerance: 0.0,
            status: Status::Inconclusive,
            ms: 0,
            note: String::new(),
        }
    }

    /// value ≤ bound + tolerance.
    fn judge(mut self, value: f64, bound_expr: &str, bound: f64, tolerance: f64, started: Instant) -> Self {
        self.value = value + 0.0;
        self.bound_expr = bound_expr.into();
        self.bound = bound;
        self.tolerance = tolerance;
        self.status = Status::from_bool(value <= bound + tolerance);
        self.ms = started.elapsed().as_millis();
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn refused(mut self, e: &Error, started: Instant) -> Self {
        self.status = Status::Inconclusive;
        self.note = format!("refused: {e}");
        self.ms = started.elapsed().as_millis();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Constants for bounds whose constant is unspecified, calibrated once and
/// committed in `constants.json` next to the crate manifest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// ‖(V^glued − V³V²V¹)Π_{≤1}‖ ≤ C·t²/2^λ.
    pub glued_closeness: f64,
    /// ‖(V − W)Π_{≤t}‖ ≤ C·√(t³/2^λ).
    pub w_vs_v: f64,
    /// Per-query commutation norm ≤ C·t²/2^λ.
    pub ocomp_commutation: f64,
}

pub const CONSTANTS_JSON: &str = include_str!("../constants.json");

pub fn constants() -> Constants {
    serde_json::from_str(CONSTANTS_JSON).expect("constants.json parses")
}

fn pw(lambda: u32) -> f64 {
    2f64.powi(lambda as i32)
}

fn params(n: u32, lambda: u32, t: usize, samples: usize, seed: u64) -> Params {
    Params { n, lambda, t, samples, seed }
}

fn push(cs: &mut ColumnSet<(u64, DbKey)>, v: &PurifiedState) {
    cs.push(v.iter().map(|(k, a)| (k.clone(), *a)));
}

/// Distance of a spectrum from {0, 1}.
fn spectrum_defect(sv: &[f64]) -> f64 {
    sv.iter().map(|s| s.abs().min((s - 1.0).abs())).fold(0.0, f64::max)
}

/// Σ_{k≤t} C(pairs, k): relation sets of at most t pairs drawn from `pairs`.
fn sets_up_to(pairs: f64, t: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=t {
        term *= (pairs - (k - 1) as f64) / k as f64;
        sum += term.max(0.0);
    }
    sum
}

/// Refuses enumerations with more input columns than the memory cap allows.
fn guard(what: &str, columns: f64) -> Result<()> {
    let cap = max_entries();
    if columns > cap as f64 {
        return Err(Error::TooLarge { what: what.into(), size: columns.min(usize::MAX as f64) as usize, cap });
    }
    Ok(())
}

fn single_estimate(width: u32, t: usize) -> f64 {
    let n = 2f64.powi(width as i32);
    sets_up_to(2.0 * n * n, t) * n
}

/// Columns of a sextuple enumeration with `components` each holding ≤ t pairs.
fn sextuple_estimate(g: &GluedLayout, components: usize, t: usize) -> f64 {
    let m = 2f64.powi(g.component_width() as i32);
    sets_up_to(2.0 * m * m, t).powi(components as i32) * 2f64.powi(g.query() as i32)
}

pub type Job<'a> = Box<dyn FnOnce() -> Result<ExperimentReport> + Send + 'a>;

/// Runs the jobs on `available_parallelism` workers and returns the reports
/// in job order, so the merged output does not depend on scheduling.
pub fn run_jobs(jobs: Vec<Job<'_>>) -> Result<Vec<ExperimentReport>> {
    let count = jobs.len();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(count.max(1));
    let queue = std::sync::Mutex::new(jobs.into_iter().enumerate());
    let slots: std::sync::Mutex<Vec<Option<Result<ExperimentReport>>>> = std::sync::Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|sc| {
        for _ in 0..workers {
            sc.spawn(|| loop {
                let next = queue.lock().expect("queue lock").next();
                let Some((i, job)) = next else { break };
                let r = job();
                slots.lock().expect("slot lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("slot lock").into_iter().map(|r| r.expect("every job ran")).collect()
}

// ---------------------------------------------------------------- path recording

/// One forward query with an ancilla: the purified output traced over the
/// database equals the first-moment twirl, I/N on the query register
/// tensored with the ancilla's reduced state.
pub fn t1_exactness(n: u32, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("pr.t1_exact", "For any t-query algorithm", params(n, 0, 1, 0, seed));
    let anc = 1;
    let c = AdversaryCircuit::random(n, anc, 1, seed)?;
    let lay = SystemLayout::new(n, anc);
    let start = PurifiedState::basis(lay, Arity::Single, 0, DbKey::empty()).apply_system(&c.locals[0])?;
    let out = apply_pr(&start)?.apply_system(&c.locals[1])?;
    let rho = out.reduced_density()?;
    // twirl of L₀|0⟩ on the query register, then L₁
    let mut e = nalgebra::DVector::from_element(c.dim(), ZERO);
    e[0] = C64::new(1.0, 0.0);
    let regs = RegisterLayout::new(&[("Q", n as usize), ("E", anc as usize)]);
    let before = pure_density(&(&c.locals[0] * e));
    let anc_state = partial_trace(&before, &regs, &["E"])?;
    let nq = 1usize << n;
    let mixed = DMatrix::<C64>::identity(nq, nq) / C64::new(nq as f64, 0.0);
    let twirled = &c.locals[1] * mixed.kronecker(&anc_state) * c.locals[1].adjoint();
    let td = trace_distance(&rho, &twirled)?;
    Ok(rep.judge(td, "0", 0.0, 1e-9, st))
}

fn single_columns(width: u32, t: usize) -> Vec<PurifiedState> {
    let lay = SystemLayout::new(width, 0);
    let mut out = Vec::new();
    for db in enumerate_single_dbs(width, t) {
        for s in 0..(1u64 << width) {
            out.push(PurifiedState::basis(lay, Arity::Single, s, db.clone()).with_saturation(Saturation::Vanish));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SingleOp {
    V,
    W,
}

/// Singular values of V or W^{𝔪(λ)} restricted to Π_{≤t}, all columns.
pub fn single_isometry(op: SingleOp, n: u32, lambda: u32, t: usize) -> Result<ExperimentReport> {
    let st = Instant::now();
    let id = match op {
        SingleOp::V => "pr.isometry.v",
        SingleOp::W => "pr.isometry.w",
    };
    let rep = ExperimentReport::new(id, "restricted path recording operator", params(n, lambda, t, 0, 0));
    if let Err(e) = guard("single-database columns", single_estimate(2 * n + lambda, t)) {
        return Ok(rep.refused(&e, st));
    }
    let mut cs = ColumnSet::new();
    for col in single_columns(2 * n + lambda, t) {
        let out = match op {
            SingleOp::V => apply_v(&col)?,
            SingleOp::W => apply_w_mid(&col, n, lambda)?,
        };
        push(&mut cs, &out);
    }
    let d = spectrum_defect(&cs.singular_values()?);
    Ok(rep.judge(d, "singular values in {0,1}", 0.0, 1e-8, st).with_note(format!("{} columns", cs.len())))
}

/// max over |L|+|R| ≤ t of |N − |f| − t| / |f| for the W rule; infinite
/// once some output set is empty.
pub fn w_delta(n: u32, lambda: u32, t: usize) -> Result<f64> {
    let width = 2 * n + lambda;
    let lay = SystemLayout::new(width, 0);
    let big_n = (1u64 << width) as f64;
    let mut delta = 0f64;
    for slot in [crate::path_recording::L, crate::path_recording::R] {
        let rule = w_rule(lay, n, lambda, slot)?;
        for db in enumerate_single_dbs(width, t) {
            let f = rule.count(&db) as f64;
            let d = if f == 0.0 { f64::INFINITY } else { (big_n - f - t as f64).abs() / f };
            delta = delta.max(d);
        }
    }
    Ok(delta)
}

/// ‖(V − W^{𝔪(λ)})Π_{≤t}‖ against 8√(2(t+1)δ).
pub fn generalized_pr(n: u32, lambda: u32, t: usize) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("pr.generalized", "Let f_L and f_R be functions", params(n, lambda, t, 0, 0));
    if let Err(e) = guard("single-database columns", single_estimate(2 * n + lambda, t)) {
        return Ok(rep.refused(&e, st));
    }
    let mut cs = ColumnSet::new();
    for col in single_columns(2 * n + lambda, t) {
        push(&mut cs, &apply_v(&col)?.minus(&apply_w_mid(&col, n, lambda)?));
    }
    let norm = cs.norm()?;
    let delta = w_delta(n, lambda, t)?;
    let bound = 8.0 * (2.0 * (t as f64 + 1.0) * delta).sqrt();
    let c = norm / ((t as f64).powi(3) / pw(lambda)).sqrt();
    Ok(rep
        .judge(norm, "8·sqrt(2(t+1)δ)", bound, 1e-9, st)
        .with_note(format!("δ = {delta}; C·sqrt(t³/2^λ) shape constant {c:.4}")))
}

/// ‖(V − W)Π_{≤t}‖ ≤ C·√(t³/2^λ) with the recorded C.
pub fn w_vs_v_shape(n: u32, lambda: u32, t: usize, k: &Constants) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("pr.w_vs_v", "restricted path recording operator", params(n, lambda, t, 0, 0));
    if let Err(e) = guard("single-database columns", single_estimate(2 * n + lambda, t)) {
        return Ok(rep.refused(&e, st));
    }
    let mut cs = ColumnSet::new();
    for col in single_columns(2 * n + lambda, t) {
        push(&mut cs, &apply_v(&col)?.minus(&apply_w_mid(&col, n, lambda)?));
    }
    let norm = cs.norm()?;
    let shape = ((t as f64).powi(3) / pw(lambda)).sqrt();
    Ok(rep.judge(norm, "C·sqrt(t³/2^λ)", k.w_vs_v * shape, 1e-9, st))
}

pub fn suite_path_recording(p: Params) -> Result<Vec<ExperimentReport>> {
    let k = constants();
    let (n, l, t) = (p.n, p.lambda, p.t);
    run_jobs(vec![
        Box::new(move || t1_exactness(n, p.seed)),
        Box::new(move || single_isometry(SingleOp::V, n, l, t)),
        Box::new(move || single_isometry(SingleOp::W, n, l, t)),
        Box::new(move || generalized_pr(n, l, t)),
        Box::new(move || w_vs_v_shape(n, l, t, &k)),
    ])
}

// ---------------------------------------------------------------- glued

fn sextuple_columns(g: &GluedLayout, components: &[usize], t: usize) -> Result<Vec<PurifiedState>> {
    let mut out = Vec::new();
    for db in crate::glued::enumerate_sextuple_dbs(g, components, t)? {
        for s in 0..(1u64 << g.query()) {
            out.push(PurifiedState::basis(g.system(), Arity::Sextuple, s, db.clone()).with_saturation(Saturation::Vanish));
        }
    }
    Ok(out)
}

/// ‖V_L^{1,†} V_R² Π_{≤t}‖ with Π_{≤t} bounding the total number of pairs
/// in components 1 and 2; component 3 is a spectator and stays empty. The
/// note carries the norm when each component is bounded by t separately.
pub fn monogamy(n: u32, lambda: u32, t: usize) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("glued.monogamy", "be such that it acts on", params(n, lambda, t, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    if let Err(e) = guard("sextuple columns", sextuple_estimate(&g, 2, t)) {
        return Ok(rep.refused(&e, st));
    }
    let ops = GluedOps::new(g, Variant::Plain)?;
    let (mut total, mut per_component) = (ColumnSet::new(), ColumnSet::new());
    for col in sextuple_columns(&g, &[1, 2], t)? {
        let out = unrecord(&record(&col, ops.rule(2, Half::R))?, ops.rule(1, Half::L))?;
        if out.is_empty() {
            continue;
        }
        let size = col.iter().next().map(|((_, db), _)| db.size()).unwrap_or(0);
        if size <= t {
            push(&mut total, &out);
        }
        push(&mut per_component, &out);
    }
    let norm = total.norm()?;
    let bound = (t * t) as f64 / pw(lambda);
    Ok(rep
        .judge(norm, "t²/2^λ", bound, 1e-9, st)
        .with_note(format!("{} columns; per-component Π_{{≤t}} gives {:.5}", total.len(), per_component.norm()?)))
}

/// ‖(V^glued − V³V²V¹)Π_{≤1}‖·2^λ/t², checked against 4 and the recorded C.
pub fn glued_closeness(n: u32, lambda: u32, k: &Constants) -> Result<ExperimentReport> {
    let st = Instant::now();
    let t = 1;
    let rep = ExperimentReport::new("glued.closeness", "Let V^glued be defined as before", params(n, lambda, t, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    if let Err(e) = guard("sextuple columns", sextuple_estimate(&g, 3, t)) {
        return Ok(rep.refused(&e, st));
    }
    let ops = GluedOps::new(g, Variant::Plain)?;
    let mut cs = ColumnSet::new();
    for col in sextuple_columns(&g, &[1, 2, 3], t)? {
        push(&mut cs, &ops.apply(&col)?.minus(&ops.sequential(&col)?));
    }
    let norm = cs.norm()?;
    let c = norm * pw(lambda) / (t * t) as f64;
    let bound = k.glued_closeness.min(4.0);
    Ok(rep.judge(c, "C ≤ min(4, recorded C)", bound, 1e-9, st).with_note(format!("norm {norm:.6}")))
}

/// A random sextuple database with at most `t` pairs in total.
pub fn random_sextuple_db<G: Rng + ?Sized>(g: &GluedLayout, t: usize, rng: &mut G) -> DbKey {
    let w = 1u64 << g.component_width();
    let k = rng.gen_range(0..=t);
    let mut db = DbKey::empty();
    let mut tries = 0;
    while db.size() < k && tries < 100 {
        tries += 1;
        let half = if rng.gen_bool(0.5) { Half::L } else { Half::R };
        let slot = crate::glued::slot(rng.gen_range(1..=3), half);
        if let Ok(d) = db.with(slot, rng.gen_range(0..w), rng.gen_range(0..w)) {
            db = d;
        }
    }
    db
}

/// Π_{≤t} on total database size; A†A of every glued operator preserves it.
fn restrict(psi: &PurifiedState, t: usize) -> PurifiedState {
    let mut out = psi.empty_like();
    for ((s, db), a) in psi.iter() {
        if db.size() <= t {
            out.add(*s, db.clone(), *a);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GluedOp {
    /// V^{(i),mid}_X for component i.
    Component(usize, Half),
    VGlued,
    WGlued,
}

impl GluedOp {
    pub fn all() -> Vec<GluedOp> {
        let mut v: Vec<GluedOp> = (1..=3).flat_map(|i| [GluedOp::Component(i, Half::L), GluedOp::Component(i, Half::R)]).collect();
        v.push(GluedOp::VGlued);
        v.push(GluedOp::WGlued);
        v
    }

    pub fn id(self) -> String {
        match self {
            GluedOp::Component(i, h) => format!("glued.isometry.v{i}{}", if h == Half::L { "l" } else { "r" }),
            GluedOp::VGlued => "glued.isometry.vglued".into(),
            GluedOp::WGlued => "glued.isometry.wglued".into(),
        }
    }
}

/// Every sextuple database with at most `t` pairs in total.
pub fn sextuple_dbs_total(g: &GluedLayout, t: usize) -> Result<Vec<DbKey>> {
    let w = 1u64 << g.component_width();
    let mut pairs = Vec::new();
    for sl in [L1, R1, L2, R2, L3, R3] {
        for x in 0..w {
            for y in 0..w {
                pairs.push((sl, x, y));
            }
        }
    }
    fn grow(pairs: &[(u8, u64, u64)], from: usize, db: &DbKey, left: usize, out: &mut Vec<DbKey>) -> Result<()> {
        out.push(db.clone());
        if left == 0 {
            return Ok(());
        }
        for (i, &(sl, x, y)) in pairs.iter().enumerate().skip(from) {
            grow(pairs, i + 1, &db.with(sl, x, y)?, left - 1, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    grow(&pairs, 0, &DbKey::empty(), t, &mut out)?;
    Ok(out)
}

/// Partial-isometry check of a sextuple operator A on Π_{≤2} (total size):
/// every basis column e satisfies G(Ge) = Ge with G = ΠA†AΠ, and the
/// restriction of A to total size ≤ 1 has singular values in {0, 1}. With
/// `samples == 0` all columns are visited; otherwise a random subset.
pub fn glued_isometry(op: GluedOp, n: u32, lambda: u32, samples: usize, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new(&op.id(), "we define the glued purification as follows", params(n, lambda, 2, samples, seed));
    let g = GluedLayout::new(n, lambda, 0)?;
    let m = 2f64.powi(g.component_width() as i32);
    let exhaustive = sets_up_to(6.0 * m * m, 2) * 2f64.powi(g.query() as i32);
    if let Err(e) = guard("sextuple columns", if samples == 0 { exhaustive } else { samples as f64 }) {
        return Ok(rep.refused(&e, st));
    }
    let defects = glued_column_defects(op, &g, samples, seed)?;
    let col_defect = defects.iter().map(|d| d.defect).fold(0.0, f64::max);
    let off: Vec<_> = defects.iter().filter(|d| d.defect > 1e-8).collect();
    let off_good = off.iter().filter(|d| d.good).count();
    let fwd = GluedForward::new(op, g)?;
    let mut cs = ColumnSet::new();
    for db in sextuple_dbs_total(&g, 1)? {
        for s in 0..(1u64 << g.query()) {
            let e = PurifiedState::basis(g.system(), Arity::Sextuple, s, db.clone()).with_saturation(Saturation::Vanish);
            push(&mut cs, &fwd.apply(&e)?);
        }
    }
    let spec = spectrum_defect(&cs.singular_values()?);
    Ok(rep.judge(col_defect.max(spec), "singular values in {0,1}", 0.0, 1e-8, st).with_note(format!(
        "column identity {col_defect:.2e} ({} of {} columns off, {off_good} of them good); size≤1 spectrum {spec:.2e}",
        off.len(),
        defects.len()
    )))
}

/// A glued operator together with its adjoint.
pub struct GluedForward {
    op: GluedOp,
    mid: GluedOps,
    plain: GluedOps,
}

impl GluedForward {
    pub fn new(op: GluedOp, g: GluedLayout) -> Result<Self> {
        Ok(GluedForward { op, mid: GluedOps::new(g, Variant::Mid)?, plain: GluedOps::new(g, Variant::Plain)? })
    }

    pub fn apply(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        match self.op {
            GluedOp::Component(i, h) => record(psi, self.mid.rule(i, h)),
            GluedOp::VGlued => self.plain.apply(psi),
            GluedOp::WGlued => self.mid.apply(psi),
        }
    }

    pub fn apply_dag(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        match self.op {
            GluedOp::Component(i, h) => unrecord(psi, self.mid.rule(i, h)),
            GluedOp::VGlued => self.plain.apply_dag(psi),
            GluedOp::WGlued => self.mid.apply_dag(psi),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ColumnDefect {
    pub sys: u64,
    pub db: DbKey,
    /// ‖G²e − Ge‖ with G = Π_{≤2}A†AΠ_{≤2}.
    pub defect: f64,
    pub good: bool,
}

/// The idempotence defect of Π A†A Π on every basis column of total size
/// ≤ 2 (`samples == 0`) or on `samples` random ones.
pub fn glued_column_defects(op: GluedOp, g: &GluedLayout, samples: usize, seed: u64) -> Result<Vec<ColumnDefect>> {
    let a = GluedForward::new(op, *g)?;
    let q = 1u64 << g.query();
    let columns: Vec<(u64, DbKey)> = if samples == 0 {
        sextuple_dbs_total(g, 2)?.into_iter().flat_map(|db| (0..q).map(move |s| (s, db.clone()))).collect()
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let db = random_sextuple_db(g, 2, &mut rng);
                (rng.gen_range(0..q), db)
            })
            .collect()
    };
    columns
        .into_iter()
        .map(|(sys, db)| {
            let e = PurifiedState::basis(g.system(), Arity::Sextuple, sys, db.clone()).with_saturation(Saturation::Vanish);
            let ge = restrict(&a.apply_dag(&a.apply(&e)?)?, 2);
            let gge = restrict(&a.apply_dag(&a.apply(&ge)?)?, 2);
            let good = crate::structure::is_good(&db, g);
            Ok(ColumnDefect { sys, db, defect: gge.distance(&ge), good })
        })
        .collect()
}

/// V^{glued,†}V^glued returns every fresh basis input unchanged.
pub fn example_one(n: u32, lambda: u32) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("glued.example1", "Example 1", params(n, lambda, 1, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    let ops = GluedOps::new(g, Variant::Plain)?;
    let mut worst = 0f64;
    for s in 0..(1u64 << g.query()) {
        let e = g.empty_state(s);
        worst = worst.max(ops.apply_dag(&ops.apply(&e)?)?.distance(&e));
    }
    Ok(rep.judge(worst, "0", 0.0, 1e-10, st))
}

/// V^glued on ABC₁, then V^{glued,†} on ABC₂ with a fresh C₂: the database
/// either holds one pair in each of L₁, L₂, R₂, R₁ with L₃, R₃ empty, linked
/// through the B labels, or is empty. The empty amplitude is
/// ⟨ψ|SWAP_CD|ψ⟩ = Pr[y_C = c₂] = 2^{−n} with ψ = V^glued|x c₂⟩, landing on
/// D = c₂, so the empty branch carries weight 2^{−2n}.
pub fn example_two(n: u32, lambda: u32) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("glued.example2", "the database register looks as follows", params(n, lambda, 1, 0, 0));
    let g = GluedLayout::new(n, lambda, n)?;
    let ops = GluedOps::new(g, Variant::Plain)?;
    let mut worst = 0f64;
    let mut bad_pattern = 0usize;
    let cm = (1u64 << n) - 1;
    for x in 0..(1u64 << g.query()) {
        for c2 in 0..(1u64 << n) {
            let sys = (x << n) | c2;
            let first = ops.apply(&g.empty_state(sys).with_saturation(Saturation::Vanish))?;
            // swap C and D
            let mut swapped = first.empty_like();
            for ((s, db), a) in first.iter() {
                let (c, d) = ((s >> n) & cm, s & cm);
                let s2 = (s & !((cm << n) | cm)) | (d << n) | c;
                swapped.add(s2, db.clone(), *a);
            }
            let out = ops.apply_dag(&swapped)?;
            let mut empty_weight = 0.0;
            for ((_, db), a) in out.iter() {
                if db.is_empty() {
                    empty_weight += a.norm_sqr();
                    continue;
                }
                let sizes: Vec<usize> = [L1, R1, L2, R2, L3, R3].iter().map(|&s| db.slot_len(s)).collect();
                let linked = {
                    let (l1, l2) = (db.slot(L1).next(), db.slot(L2).next());
                    match (l1, l2) {
                        (Some((_, y1)), Some((x2, _))) => (y1 & ((1 << lambda) - 1)) == (x2 >> n),
                        _ => false,
                    }
                };
                if sizes != [1, 1, 1, 1, 0, 0] || !linked {
                    bad_pattern += 1;
                }
            }
            worst = worst.max((empty_weight - 2f64.powi(-2 * n as i32)).abs());
            worst = worst.max((out.norm() - 1.0).abs());
        }
    }
    let value = if bad_pattern > 0 { f64::INFINITY } else { worst };
    Ok(rep.judge(value, "0", 0.0, 1e-10, st).with_note(format!("{bad_pattern} off-pattern databases")))
}

/// ‖(V^glued − W^glued)Π_{≤t}‖ against √(t⁴/2^λ).
pub fn v_vs_w_glued(n: u32, lambda: u32, t: usize) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("glued.v_vs_w", "For any adversary A that makes", params(n, lambda, t, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    if let Err(e) = guard("sextuple columns", sextuple_estimate(&g, 3, t)) {
        return Ok(rep.refused(&e, st));
    }
    let (plain, mid) = (GluedOps::new(g, Variant::Plain)?, GluedOps::new(g, Variant::Mid)?);
    let mut cs = ColumnSet::new();
    for col in sextuple_columns(&g, &[1, 2, 3], t)? {
        push(&mut cs, &plain.apply(&col)?.minus(&mid.apply(&col)?));
    }
    let norm = cs.norm()?;
    let shape = ((t as f64).powi(4) / pw(lambda)).sqrt();
    Ok(rep
        .judge(norm, "2·sqrt(t⁴/2^λ)", 2.0 * shape, 1e-9, st)
        .with_note("per-query operator norm; the adversary-level statement sums these"))
}

pub fn suite_glued(p: Params) -> Result<Vec<ExperimentReport>> {
    let k = constants();
    let (n, l, t) = (p.n, p.lambda, p.t);
    let mut jobs: Vec<Job> = vec![
        Box::new(move || monogamy(n, l, t)),
        Box::new(move || glued_closeness(n, l, &k)),
        Box::new(move || example_one(n, l)),
        Box::new(move || example_two(n, l)),
        Box::new(move || v_vs_w_glued(n, l, t)),
    ];
    for op in GluedOp::all() {
        jobs.push(Box::new(move || glued_isometry(op, n, l, 0, p.seed)));
    }
    run_jobs(jobs)
}

// ---------------------------------------------------------------- structure

/// Largest ‖(I − Π^Good)W^{glued(†)}|sys⟩|𝔊(S̄)⟩‖ over good parameters with
/// len(S̄) ≤ max_len.
pub fn good_closure(n: u32, lambda: u32, max_len: usize) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("structure.closure", "Let |φ⟩ be some state such that", params(n, lambda, max_len, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    let sim = Simulator::new(g)?;
    let params_list = enumerate_good_params(&g, max_len, max_len / 2);
    let mut worst = 0f64;
    let mut cols = 0;
    for s in &params_list {
        for sys in 0..(1u64 << g.query()) {
            let psi = sim.column(sys, s)?;
            for dir in [Direction::Forward, Direction::Inverse] {
                worst = worst.max(good_residual(&sim.glued(&psi, dir)?, &g)?);
            }
            cols += 1;
        }
    }
    Ok(rep.judge(worst, "0", 0.0, 1e-9, st).with_note(format!("{cols} good columns")))
}

/// ‖[Π^Good, Π^{R,·}]‖ = ‖(I − Π^Good)Π^{R,·}Π^Good‖ on enumerated good columns.
pub fn projector_commutation(n: u32, lambda: u32, tag: ProjectorTag) -> Result<ExperimentReport> {
    let st = Instant::now();
    let id = format!("structure.commute.{tag:?}").to_lowercase();
    let rep = ExperimentReport::new(&id, "their product is a projector", params(n, lambda, 0, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    let sim = Simulator::new(g)?;
    let cap = 1usize << lambda;
    let mut cs = ColumnSet::new();
    for s in enumerate_good_params(&g, cap, cap / 2) {
        for sys in 0..(1u64 << g.query()) {
            let q = sim.ops.projector(&sim.column(sys, &s)?, tag)?;
            push(&mut cs, &q.minus(&project_good(&q, &g)?));
        }
    }
    let norm = cs.norm()?;
    Ok(rep.judge(norm, "0", 0.0, 1e-8, st))
}

/// Every χ state with base and chain fitting the labels.
pub fn enumerate_chi(g: &GluedLayout, max_base: usize) -> Vec<ChiParams> {
    let cap = 1usize << g.lambda;
    let tuples = |k: usize| crate::structure::all_tuples(g.n, k);
    let mut out = Vec::new();
    for base in enumerate_good_params(g, cap, max_base) {
        for family in [Family::Left, Family::Right] {
            for index in 1..=3u8 {
                for len in 2..=cap.saturating_sub(base.len()) {
                    if index == 3 && len != 2 {
                        continue;
                    }
                    let ylen = match index {
                        1 => len - 1,
                        2 => len.saturating_sub(2),
                        _ => 0,
                    };
                    for start_left in [true, false] {
                        if index == 3 && !start_left {
                            continue;
                        }
                        for x in tuples(len) {
                            for y in tuples(ylen) {
                                for w1 in 0..(1u64 << g.lambda) {
                                    let cs: Vec<u64> = if index == 1 { (0..(1u64 << g.n)).collect() } else { vec![0] };
                                    for c in cs {
                                        let p = ChiParams { family, index, base: base.clone(), start_left, x: x.clone(), y: y.clone(), w1, c };
                                        if p.valid(g) {
                                            out.push(p);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Norm one and pairwise orthogonality of the χ states within each
/// (family, index) set. Sets of different index span nested subspaces
/// (Π^{R,123} ≤ Π^{R,12} ≤ Π^{R,1}), so they overlap by construction.
pub fn chi_orthonormality(n: u32, lambda: u32) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("structure.chi_orthonormal", "we first define the following vectors", params(n, lambda, 0, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    let all = enumerate_chi(&g, 1);
    let mut worst = 0f64;
    for family in [Family::Left, Family::Right] {
        for index in 1..=3u8 {
            let states: Vec<PurifiedState> = all
                .iter()
                .filter(|p| p.family == family && p.index == index)
                .map(|p| chi_state(p, &g))
                .collect::<Result<_>>()?;
            for i in 0..states.len() {
                worst = worst.max((states[i].norm() - 1.0).abs());
                for j in 0..i {
                    worst = worst.max(states[i].inner(&states[j]).norm());
                }
            }
        }
    }
    Ok(rep.judge(worst, "0", 0.0, 1e-10, st).with_note(format!("{} χ states", all.len())))
}

/// V_R¹V_R²V_R³ and V_L³V_L²V_L¹ on |x₀ w₁ x₁⟩|𝔊(S̄)⟩ give χ^{𝔩,3} and χ^{𝔯,3}.
pub fn chi_three_actions(n: u32, lambda: u32) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("structure.ltor1", "Let S̄ be some good state parameter", params(n, lambda, 0, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    let ops = GluedOps::new(g, Variant::Mid)?;
    let cap = 1usize << lambda;
    let mut worst = 0f64;
    let mut count = 0;
    for base in enumerate_good_params(&g, cap.saturating_sub(2), 1) {
        for sys in 0..(1u64 << g.query()) {
            let (x0, w1, x1) = (sys >> (lambda + n), (sys >> n) & ((1 << lambda) - 1), sys & ((1 << n) - 1));
            let psi = good_state(sys, &base, &g)?;
            for (family, start_left) in [(Family::Left, false), (Family::Right, true)] {
                let mut out = psi.clone();
                let order: [usize; 3] = if family == Family::Left { [3, 2, 1] } else { [1, 2, 3] };
                let half = if family == Family::Left { Half::R } else { Half::L };
                for i in order {
                    out = record(&out, ops.rule(i, half))?;
                }
                let p = ChiParams { family, index: 3, base: base.clone(), start_left, x: vec![x0, x1], y: vec![], w1, c: 0 };
                worst = worst.max(out.distance(&chi_state(&p, &g)?));
                count += 1;
            }
        }
    }
    Ok(rep.judge(worst, "0", 0.0, 1e-10, st).with_note(format!("{count} inputs")))
}

/// V_R¹V_R²V_L³† χ^{𝔯,1}⊗|x'⟩ = χ^{𝔩,2} and the mirror identity, on every
/// χ^{·,1} whose extended chain fits the labels.
pub fn chi_two_actions(n: u32, lambda: u32) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("structure.ltor2", "Let S̄ be some good state parameter", params(n, lambda, 0, 0, 0));
    let g = GluedLayout::new(n, lambda, 0)?;
    let ops = GluedOps::new(g, Variant::Mid)?;
    let cap = 1usize << lambda;
    let mut worst = 0f64;
    let mut count = 0;
    for p in enumerate_chi(&g, 1) {
        if p.index != 1 || p.base.len() + p.x.len() + 1 > cap {
            continue;
        }
        let mut q = p.clone();
        q.family = if p.family == Family::Right { Family::Left } else { Family::Right };
        q.index = 2;
        q.x.push(p.c);
        if !q.valid(&g) {
            continue;
        }
        let psi = chi_state(&p, &g)?.with_saturation(Saturation::Vanish);
        let out = match p.family {
            Family::Right => record(&record(&unrecord(&psi, ops.rule(3, Half::L))?, ops.rule(2, Half::R))?, ops.rule(1, Half::R))?,
            Family::Left => record(&record(&unrecord(&psi, ops.rule(1, Half::R))?, ops.rule(2, Half::L))?, ops.rule(3, Half::L))?,
        };
        worst = worst.max(out.distance(&chi_state(&q, &g)?));
        count += 1;
    }
    let rep = rep.judge(worst, "0", 0.0, 1e-10, st).with_note(format!("{count} inputs"));
    Ok(if count == 0 { ExperimentReport { status: Status::Inconclusive, note: "no χ^{·,1} fits the labels".into(), ..rep } } else { rep })
}

pub fn suite_structure(p: Params) -> Result<Vec<ExperimentReport>> {
    let (n, l) = (p.n, p.lambda);
    let mut jobs: Vec<Job> = vec![Box::new(move || good_closure(n, l, 2 * p.t.max(1)))];
    for tag in [ProjectorTag::R1, ProjectorTag::R12, ProjectorTag::R123] {
        jobs.push(Box::new(move || projector_commutation(n, l, tag)));
    }
    jobs.push(Box::new(move || chi_orthonormality(n, l)));
    jobs.push(Box::new(move || chi_three_actions(n, l)));
    jobs.push(Box::new(move || chi_two_actions(n, l)));
    run_jobs(jobs)
}

// ---------------------------------------------------------------- simulator

/// Largest norm of the exact-zero sub-identities over random domain states.
pub fn exact_pieces(n: u32, lambda: u32, t: usize, samples: usize, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("simulator.exact_pieces", "works in this four subspaces", params(n, lambda, t, samples, seed));
    let g = GluedLayout::new(n, lambda, 0)?;
    let sim = Simulator::new(g)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0f64;
    let mut used = 0;
    for piece in ExactPiece::ALL {
        let dom: Vec<_> = (0..samples).filter_map(|_| piece.random_input(&g, t, &mut rng).transpose()).collect::<Result<_>>()?;
        used += dom.len();
        if !dom.is_empty() {
            worst = worst.max(sim.exact_piece(piece, &dom)?.norm);
        }
    }
    Ok(rep.judge(worst, "0", 0.0, 1e-9, st).with_note(format!("{used} domain states over 8 pieces")))
}

/// Random good columns with b − a ≤ t, with duplicates removed.
pub fn good_columns(g: &GluedLayout, t: usize, samples: usize, seed: u64) -> Vec<(u64, GoodParam)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out: Vec<(u64, GoodParam)> =
        (0..samples).map(|_| (rng.gen_range(0..(1u64 << g.query())), random_good_param(g, t, &mut rng))).collect();
    out.sort();
    out.dedup();
    out
}

/// Per-query commutation norm (both directions) as a multiple of t²/2^λ.
pub fn ocomp_commutation(n: u32, lambda: u32, t: usize, samples: usize, seed: u64, k: &Constants) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("simulator.commutation", "simulates the database", params(n, lambda, t, samples, seed));
    let g = GluedLayout::new(n, lambda, 0)?;
    let sim = Simulator::new(g)?;
    let cols = good_columns(&g, t, samples, seed);
    let mut norm = 0f64;
    for dir in [Direction::Forward, Direction::Inverse] {
        norm = norm.max(sim.commutation(&cols, dir)?.total.norm);
    }
    let shape = (t * t) as f64 / pw(lambda);
    Ok(rep
        .judge(norm, "C·t²/2^λ", k.ocomp_commutation * shape, 1e-9, st)
        .with_note(format!("C = {:.4} on {} sampled columns (lower bound on the operator norm)", norm / shape, cols.len())))
}

/// Alternating queries: ‖O_comp φ_i − ψ_i‖ ≤ Σ_{j≤i} e_j after every query.
pub fn induction_check(n: u32, lambda: u32, queries: usize, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("simulator.induction", "We prove the following claim by induction", params(n, lambda, queries, 0, seed));
    let g = GluedLayout::new(n, lambda, 0)?;
    let sim = Simulator::new(g)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let us: Vec<DenseOperator> = (0..queries).map(|_| haar_sample_with(1 << g.query(), &mut rng)).collect::<Result<_>>()?;
    let steps = induction(&sim, &us)?;
    let excess = steps.iter().map(|s| s.distance - s.cumulative_bound).fold(f64::NEG_INFINITY, f64::max);
    let last = steps.last().map(|s| (s.distance, s.cumulative_bound)).unwrap_or((0.0, 0.0));
    Ok(rep
        .judge(excess, "distance − Σ e_j ≤ 0", 0.0, 1e-9, st)
        .with_note(format!("final distance {:.4e}, final bound {:.4e}", last.0, last.1)))
}

pub fn suite_simulator(p: Params) -> Result<Vec<ExperimentReport>> {
    let k = constants();
    let (n, l, t) = (p.n, p.lambda, p.t.max(1));
    run_jobs(vec![
        Box::new(move || exact_pieces(n, l, t, p.samples.min(50), p.seed)),
        Box::new(move || ocomp_commutation(n, l, t, p.samples.min(100), p.seed, &k)),
        Box::new(move || induction_check(n, l, 2 * t, p.seed)),
    ])
}

// ---------------------------------------------------------------- hybrids

/// Distance between two hybrids on one random adversary. Pairs within Monte
/// Carlo noise pass; the glued purified pair must agree exactly.
pub fn hybrid_pair(a: Hybrid, b: Hybrid, p: Params) -> Result<ExperimentReport> {
    let st = Instant::now();
    let id = format!("hybrids.{a:?}_{b:?}").to_lowercase();
    let rep = ExperimentReport::new(&id, "We define the following hybrids", p);
    let c = AdversaryCircuit::random(2 * p.n + p.lambda, 0, 2 * p.t, p.seed)?;
    let ha = match hybrid_output(a, &c, p.n, p.lambda, p.samples, p.seed ^ 0xa) {
        Ok(h) => h,
        Err(e @ Error::TooLarge { .. }) => return Ok(rep.refused(&e, st)),
        Err(e) => return Err(e),
    };
    let hb = match hybrid_output(b, &c, p.n, p.lambda, p.samples, p.seed ^ 0xb) {
        Ok(h) => h,
        Err(e @ Error::TooLarge { .. }) => return Ok(rep.refused(&e, st)),
        Err(e) => return Err(e),
    };
    let d = hybrid_distance(&ha, &hb)?;
    let exact = !a.sampled() && !b.sampled();
    let tf = p.t as f64;
    let theorem = tf * tf / pw(p.lambda).sqrt() + tf.powi(3) / pw(p.lambda) + tf.powi(3) / 2f64.powf((p.n + p.lambda) as f64 / 8.0);
    let (expr, bound, tol) = match (a, b) {
        (Hybrid::H4, Hybrid::H5) | (Hybrid::H5, Hybrid::H4) => ("0", 0.0, 1e-9),
        _ if exact => ("t²/2^{λ/2} + t³/2^λ + t³/2^{(n+λ)/8}", theorem, 1e-9),
        _ => ("t²/2^{λ/2} + t³/2^λ + t³/2^{(n+λ)/8} + 3·noise", theorem, 3.0 * d.noise),
    };
    let mut r = rep.judge(d.value, expr, bound, tol, st).with_note(format!("noise {:.3e}; min trace {:.6}", d.noise, d.min_trace));
    if !exact && d.noise > 0.05 {
        r.status = Status::Inconclusive;
    }
    Ok(r)
}

/// The six adjacent hybrid distances and the end-to-end one.
pub fn suite_hybrids(p: Params) -> Result<Vec<ExperimentReport>> {
    let hs = Hybrid::ALL;
    let mut jobs: Vec<Job> = Vec::new();
    for w in hs.windows(2) {
        let (a, b) = (w[0], w[1]);
        jobs.push(Box::new(move || hybrid_pair(a, b, p)));
    }
    jobs.push(Box::new(move || hybrid_pair(Hybrid::H1, Hybrid::H7, p)));
    run_jobs(jobs)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendPoint {
    pub lambda: u32,
    pub glued: f64,
    pub haar: f64,
    pub advantage: f64,
    pub stderr: f64,
}

/// Every step of a decreasing series must drop by at least 3σ. A step that
/// rises by 3σ or more fails; anything in between is unresolved at this
/// sample count.
fn judge_trend(rep: ExperimentReport, pts: &[(f64, f64)], st: Instant) -> ExperimentReport {
    let margin = pts.windows(2).map(|w| (w[0].0 - w[1].0) / (w[0].1.powi(2) + w[1].1.powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
    let mut r = rep.judge(-margin, "−(smallest drop / σ) ≤ −3", -3.0, 0.0, st);
    if r.status == Status::Fail && margin > -3.0 {
        r.status = Status::Inconclusive;
    }
    r
}

/// Flip-attack advantage of the glued unitary over Haar for each λ; the
/// advantages must drop by more than 3σ from each λ to the next.
pub fn gluing_trend(n: u32, lambdas: &[u32], samples: usize, seed: u64) -> Result<(ExperimentReport, Vec<TrendPoint>)> {
    let st = Instant::now();
    let rep = ExperimentReport::new("hybrids.trend", "Strong gluing of random unitaries", params(n, 0, 2, samples, seed));
    let mut pts = Vec::new();
    for &l in lambdas {
        let (m, se) = flip_attack_glued(n, l, samples, seed + l as u64)?;
        let h = flip_attack_haar(n, l);
        pts.push(TrendPoint { lambda: l, glued: m, haar: h, advantage: (m - h).abs(), stderr: se });
    }
    let drops: Vec<_> = pts.iter().map(|p| (p.advantage, p.stderr)).collect();
    let mut r = judge_trend(rep, &drops, st);
    r.note = pts.iter().map(|p| format!("λ={}: adv {:.4} ± {:.4}", p.lambda, p.advantage, p.stderr)).collect::<Vec<_>>().join("; ");
    Ok((r, pts))
}

// ---------------------------------------------------------------- stretch and moments

/// stretch_pru against an independent Kronecker placement of the three blocks.
pub fn stretch_placement(seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("stretch.placement", "consider the following construction of", params(1, 2, 1, 0, seed));
    let g = GluedLayout::new(1, 2, 0)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0f64;
    for f in 1..=3 {
        let u = haar_sample_with(8, &mut rng)?;
        let keys = StretchKeys::random(f, &mut rng);
        let k = keys.k;
        let b: Vec<DenseOperator> = (0..3).map(|i| xuxux(&u, k[3 * i], k[3 * i + 1], k[3 * i + 2], f, 3)).collect::<Result<_>>()?;
        let (i1, i2) = (DMatrix::<C64>::identity(2, 2), DMatrix::<C64>::identity(2, 2));
        let placed = b[2].kronecker(&i1) * i2.kronecker(&b[1]) * b[0].kronecker(&i1);
        worst = worst.max((stretch_pru(&u, &keys, &g)? - placed).iter().map(|z| z.norm()).fold(0.0, f64::max));
        // three-unit brickwork is the same placement when n = λ
        let us: Vec<DenseOperator> = (0..3).map(|s| haar_sample(4, seed + s)).collect::<Result<_>>()?;
        let g11 = GluedLayout::new(1, 1, 0)?;
        worst = worst.max((brickwork_chain(&us, 1)? - crate::glued::glued_unitary(&us[0], &us[1], &us[2], &g11)?).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(rep.judge(worst, "0", 0.0, 1e-12, st))
}

#[derive(Clone, Debug, Serialize)]
pub struct StretchPoint {
    pub f: u32,
    pub advantage: f64,
    pub stderr: f64,
}

/// One-query advantage of the stretched construction for f = 1, 2, 3 on a
/// 3-qubit component; advantages must drop beyond 3σ.
pub fn stretch_trend(samples: usize, seed: u64) -> Result<(ExperimentReport, Vec<StretchPoint>)> {
    let st = Instant::now();
    let rep = ExperimentReport::new("stretch.trend", "Stretching a strong PRU", params(1, 2, 1, samples, seed));
    let g = GluedLayout::new(1, 2, 0)?;
    let mut pts = Vec::new();
    for f in 1..=3 {
        let a = stretch_advantage(&g, f, samples, seed + 11 + f as u64)?;
        pts.push(StretchPoint { f, advantage: a.advantage, stderr: a.stderr });
    }
    let drops: Vec<_> = pts.iter().map(|p| (p.advantage, p.stderr)).collect();
    let mut r = judge_trend(rep, &drops, st);
    r.note = pts.iter().map(|p| format!("f={}: adv {:.3e} ± {:.1e}", p.f, p.advantage, p.stderr)).collect::<Vec<_>>().join("; ");
    Ok((r, pts))
}

/// Keyed blocks swapped for Haar one at a time. The advantage of the keyed
/// construction must be covered by the per-step changes plus what remains
/// after the last step, up to 3σ of the combined noise.
pub fn stretch_chain(f: u32, samples: usize, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("stretch.hybrid_chain", "Stretching a strong PRU", params(1, 2, 1, samples, seed));
    let g = GluedLayout::new(1, 2, 0)?;
    let steps = (0..=3).map(|k| stretch_hybrid_step(&g, f, k, samples, seed + 23 + k as u64)).collect::<Result<Vec<_>>>()?;
    let moves: Vec<f64> = steps.windows(2).map(|w| (w[0].mean - w[1].mean).abs()).collect();
    let slack = steps[0].advantage - moves.iter().sum::<f64>() - steps[3].advantage;
    let sigma = steps.iter().map(|a| a.stderr.powi(2)).sum::<f64>().sqrt();
    Ok(rep.judge(slack, "adv₀ − Σ|Δ_k| − adv₃ ≤ 0", 0.0, 3.0 * sigma, st).with_note(format!(
        "f={f}: adv {} ; steps {}",
        steps.iter().map(|a| format!("{:.2e}", a.advantage)).collect::<Vec<_>>().join(" → "),
        moves.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>().join(", ")
    )))
}

/// Exact t = 2 twirl against a Monte-Carlo twirl, entry-wise in units of σ.
pub fn weingarten_check(d: usize, samples: usize, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("haar.weingarten", "Weingarten", params(0, 0, 2, samples, seed));
    let x = haar_sample(d * d, seed ^ 0x77)?;
    let exact = weingarten_twirl(2, d, &x)?;
    let mc = mc_twirl(2, d, &x, samples, seed)?;
    let mut worst = 0f64;
    for i in 0..d * d {
        for j in 0..d * d {
            let (e, m) = (exact[(i, j)], mc.mean[(i, j)]);
            let z_re = (e.re - m.re).abs() / mc.stderr_re[(i, j)].max(1e-15);
            let z_im = (e.im - m.im).abs() / mc.stderr_im[(i, j)].max(1e-15);
            worst = worst.max(z_re).max(z_im);
        }
    }
    Ok(rep.judge(worst, "3σ per entry", 3.0, 0.0, st).with_note(format!("{} batches", BATCHES)))
}

/// Unbiasedness under seed refresh: two disjoint seed ranges agree within
/// combined 3σ.
pub fn mc_seed_refresh(samples: usize, seed: u64) -> Result<ExperimentReport> {
    let st = Instant::now();
    let rep = ExperimentReport::new("haar.seed_refresh", "Weingarten", params(1, 1, 2, samples, seed));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rng2 = ChaCha20Rng::seed_from_u64(seed.wrapping_add(1 << 32));
    let run = |r: &mut ChaCha20Rng| -> Result<(f64, f64)> {
        let vals: Vec<f64> = (0..samples)
            .map(|_| haar_sample_with(8, r).map(|u| crate::haar_oracle::flip_attack(&u, 1, 1)))
            .collect::<Result<_>>()?;
        Ok(batch_mean(&vals, BATCHES))
    };
    let (a, sa) = run(&mut rng)?;
    let (b, sb) = run(&mut rng2)?;
    let z = (a - b).abs() / (sa * sa + sb * sb).sqrt();
    Ok(rep.judge(z, "3σ", 3.0, 0.0, st))
}

// ---------------------------------------------------------------- registry

pub type SuiteFn = fn(Params) -> Result<Vec<ExperimentReport>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    PathRecording,
    Glued,
    Structure,
    Simulator,
    Hybrids,
    Stretch,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::PathRecording, Suite::Glued, Suite::Structure, Suite::Simulator, Suite::Hybrids, Suite::Stretch];

    pub fn run(self, p: Params) -> Result<Vec<ExperimentReport>> {
        match self {
            Suite::PathRecording => suite_path_recording(p),
            Suite::Glued => suite_glued(p),
            Suite::Structure => suite_structure(p),
            Suite::Simulator => suite_simulator(p),
            Suite::Hybrids => suite_hybrids(p),
            Suite::Stretch => suite_stretch(p),
        }
    }
}

pub fn suite_stretch(p: Params) -> Result<Vec<ExperimentReport>> {
    run_jobs(vec![
        Box::new(move || stretch_placement(p.seed)),
        Box::new(move || stretch_trend(p.samples, p.seed).map(|(r, _)| r)),
        Box::new(move || stretch_chain(2, p.samples, p.seed)),
        Box::new(move || weingarten_check(2, p.samples, p.seed)),
        Box::new(move || mc_seed_refresh(p.samples, p.seed)),
    ])
}

/// Lemma and theorem anchors checked by this crate, each with the suite that
/// covers it and the report ids it emits.
pub const REGISTRY: &[(&str, Suite, &[&str])] = &[
    ("For any t-query algorithm", Suite::PathRecording, &["pr.t1_exact"]),
    ("For any 2t-query algorithm", Suite::PathRecording, &["pr.isometry.v"]),
    ("Let f_L and f_R be functions", Suite::PathRecording, &["pr.generalized"]),
    ("restricted path recording operator", Suite::PathRecording, &["pr.isometry.w", "pr.w_vs_v"]),
    ("we define the glued construction", Suite::Stretch, &["stretch.placement"]),
    ("we define the glued purification as follows", Suite::Glued, &["glued.isometry.vglued"]),
    ("specific restriction on the glued path recording", Suite::Glued, &["glued.isometry.wglued"]),
    ("be such that it acts on", Suite::Glued, &["glued.monogamy"]),
    ("Let V^glued be defined as before", Suite::Glued, &["glued.closeness"]),
    ("For any adversary A that makes", Suite::Glued, &["glued.v_vs_w"]),
    ("Example 1", Suite::Glued, &["glued.example1"]),
    ("the database register looks as follows", Suite::Glued, &["glued.example2"]),
    ("associate a vertex for each entry", Suite::Structure, &["structure.closure"]),
    ("is a linear forest", Suite::Structure, &["structure.closure"]),
    ("Good line graph parametrization", Suite::Structure, &["structure.closure"]),
    ("we define the following state", Suite::Structure, &["structure.chi_orthonormal"]),
    ("Define \"good\" projector as follows", Suite::Structure, &["structure.commute.r1"]),
    ("their product is a projector", Suite::Structure, &["structure.commute.r1", "structure.commute.r12", "structure.commute.r123"]),
    ("we first define the following vectors", Suite::Structure, &["structure.chi_orthonormal"]),
    ("Let S̄ be some good state parameter", Suite::Structure, &["structure.ltor1", "structure.ltor2"]),
    ("Let |φ⟩ be some state such that", Suite::Structure, &["structure.closure"]),
    ("We define the following hybrids", Suite::Hybrids, &["hybrids.h1_h2", "hybrids.h4_h5", "hybrids.h1_h7"]),
    ("Finally, we define O_comp", Suite::Simulator, &["simulator.commutation"]),
    ("simulates the database", Suite::Simulator, &["simulator.commutation"]),
    ("We prove the following claim by induction", Suite::Simulator, &["simulator.induction"]),
    ("works in this four subspaces", Suite::Simulator, &["simulator.exact_pieces"]),
    ("Strong gluing of random unitaries", Suite::Hybrids, &["hybrids.h1_h7"]),
    ("is a strong PRU in the QHROM", Suite::Stretch, &["stretch.placement"]),
    ("Stretching a strong PRU", Suite::Stretch, &["stretch.trend", "stretch.hybrid_chain"]),
    ("Shortening a super-linear depth PRU", Suite::Stretch, &["stretch.placement"]),
];

/// Anchors that must each have a registry entry.
pub const ANCHORS: &[&str] = &[
    "For any t-query algorithm",
    "For any 2t-query algorithm",
    "Let f_L and f_R be functions",
    "restricted path recording operator",
    "we define the glued construction",
    "we define the glued purification as follows",
    "specific restriction on the glued path recording",
    "be such that it acts on",
    "Let V^glued be defined as before",
    "For any adversary A that makes",
    "associate a vertex for each entry",
    "is a linear forest",
    "Good line graph parametrization",
    "we define the following state",
    "Define \"good\" projector as follows",
    "we first define the following vectors",
    "Let S̄ be some good state parameter",
    "Let |φ⟩ be some state such that",
    "their product is a projector",
    "We define the following hybrids",
    "Finally, we define O_comp",
    "simulates the database",
    "We prove the following claim by induction",
    "works in this four subspaces",
    "Strong gluing of random unitaries",
    "is a strong PRU in the QHROM",
    "Stretching a strong PRU",
    "Shortening a super-linear depth PRU",
];

pub const CSV_HEADER: [&str; 12] = ["lemma_id", "anchor", "n", "lambda", "t", "samples", "seed", "value", "bound", "tolerance", "status", "ms"];

/// One row per report. Wall-clock times go to a separate metadata file so
/// that rows are reproducible; here `ms` is written as 0 unless `timing`.
pub fn write_csv<W: std::io::Write>(w: W, reports: &[ExperimentReport], timing: bool) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Invalid(e.to_string());
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        let ms = if timing { r.ms } else { 0 };
        wr.write_record([
            r.lemma_id.clone(),
            r.anchor.clone(),
            r.n.to_string(),
            r.lambda.to_string(),
            r.t.to_string(),
            r.samples.to_string(),
            r.seed.to_string(),
            format!("{:e}", r.value),
            format!("{:e}", r.bound),
            format!("{:e}", r.tolerance),
            r.status.as_str().to_string(),
            ms.to_string(),
        ])
        .map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Invalid(e.to_string()))
}

pub fn to_json(reports: &[ExperimentReport], timing: bool) -> String {
    let rs: Vec<ExperimentReport> = reports.iter().map(|r| ExperimentReport { ms: if timing { r.ms } else { 0 }, ..r.clone() }).collect();
    serde_json::to_string_pretty(&rs).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_every_anchor() {
        for a in ANCHORS {
            assert!(REGISTRY.iter().any(|(r, _, _)| r == a), "no suite for {a}");
        }
        for (_, _, ids) in REGISTRY {
            assert!(!ids.is_empty());
        }
    }

    #[test]
    fn t1_exactness_small() {
        for n in 1..=2 {
            assert!(t1_exactness(n, 3).unwrap().passed());
        }
    }

    #[test]
    fn csv_rows_are_reproducible() {
        let a = vec![t1_exactness(1, 5).unwrap(), example_one(1, 1).unwrap()];
        let b = vec![t1_exactness(1, 5).unwrap(), example_one(1, 1).unwrap()];
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_csv(&mut x, &a, false).unwrap();
        write_csv(&mut y, &b, false).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("lemma_id,anchor,n,lambda,t,samples,seed,value,bound,tolerance,status,ms\n"));
        assert_eq!(to_json(&a, false), to_json(&b, false));
    }

    #[test]
    fn delta_for_w() {
        // t = 1: |f| is 8 on the empty database and 4 once a middle bit is taken
        assert!((w_delta(1, 1, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!(w_delta(1, 1, 2).unwrap().is_infinite());
    }

    #[test]
    fn constants_parse() {
        let k = constants();
        assert!(k.glued_closeness > 0.0 && k.ocomp_commutation > 0.0);
    }
}
