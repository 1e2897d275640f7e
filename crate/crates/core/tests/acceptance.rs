//! Acceptance gate: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines are always printed. A failing criterion breaks the
//! run unless its failure matches the analysis checked in `explained`.
//!
//! `cargo test --test acceptance -- 3 7` runs criteria 3 and 7 only.

use haarglue::experiments::*;
use haarglue::glued::{GluedLayout, ProjectorTag};
use haarglue::linalg::haar_sample_with;
use haarglue::simulator::{induction, Simulator};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
    /// Set when the criterion fails in the way the recorded analysis predicts.
    explained: Option<String>,
}

impl Outcome {
    fn from_reports(reports: &[ExperimentReport]) -> Outcome {
        let pass = reports.iter().all(|r| r.passed());
        let detail = reports
            .iter()
            .map(|r| format!("{}({},{},{})={:.3e}≤{:.3e}:{}", r.lemma_id, r.n, r.lambda, r.t, r.value, r.bound, r.status.as_str()))
            .collect::<Vec<_>>()
            .join(" ");
        Outcome { pass, detail, explained: None }
    }
}

fn within(outcome: Outcome, started: Instant, limit_s: f64) -> Outcome {
    let s = started.elapsed().as_secs_f64();
    if s > limit_s {
        return Outcome { pass: false, detail: format!("{} [took {s:.1} s, limit {limit_s} s]", outcome.detail), ..outcome };
    }
    outcome
}

fn c1() -> Outcome {
    let st = Instant::now();
    let r: Vec<_> = (1..=3).map(|n| t1_exactness(n, 7).unwrap()).collect();
    within(Outcome::from_reports(&r), st, 1.0)
}

fn c2() -> Outcome {
    let mut reports = Vec::new();
    let mut slow = Vec::new();
    let mut timed = |r: ExperimentReport, reports: &mut Vec<ExperimentReport>| {
        if r.ms > 60_000 {
            slow.push(r.lemma_id.clone());
        }
        reports.push(r);
    };
    timed(single_isometry(SingleOp::V, 1, 1, 2).unwrap(), &mut reports);
    timed(single_isometry(SingleOp::W, 1, 1, 2).unwrap(), &mut reports);
    for op in GluedOp::all() {
        timed(glued_isometry(op, 1, 1, 0, 1).unwrap(), &mut reports);
    }
    let mut out = Outcome::from_reports(&reports);
    if !slow.is_empty() {
        out.pass = false;
        out.detail += &format!(" [over 1 min: {slow:?}]");
    }
    if !out.pass && slow.is_empty() {
        out.explained = explain_c2(&reports);
    }
    out
}

/// The only failure is W^glued at n=λ=1, confined to non-good columns, and
/// W^glued is a partial isometry on Π_{≤2} once λ = 2.
fn explain_c2(reports: &[ExperimentReport]) -> Option<String> {
    let failing: Vec<_> = reports.iter().filter(|r| !r.passed()).map(|r| r.lemma_id.as_str()).collect();
    if failing != ["glued.isometry.wglued"] {
        return None;
    }
    let g = GluedLayout::new(1, 1, 0).unwrap();
    let off: Vec<_> = glued_column_defects(GluedOp::WGlued, &g, 0, 0).unwrap().into_iter().filter(|d| d.defect > 1e-8).collect();
    if off.is_empty() || off.iter().any(|d| d.good) {
        return None;
    }
    let at2 = glued_isometry(GluedOp::WGlued, 1, 2, 2000, 5).unwrap();
    if !at2.passed() {
        return None;
    }
    Some(format!(
        "W^glued at n=λ=1 has {} off columns, none good; every one has a pair in R1 and R2 and exhausts the 2 labels; \
         at λ=2 the same check passes on 2000 random columns",
        off.len()
    ))
}

fn c3() -> Outcome {
    let st = Instant::now();
    let r: Vec<_> = [(1, 1, 1), (1, 2, 1), (1, 1, 2)].iter().map(|&(n, l, t)| monogamy(n, l, t).unwrap()).collect();
    within(Outcome::from_reports(&r), st, 60.0)
}

fn c4() -> Outcome {
    let k = constants();
    let r = glued_closeness(1, 1, &k).unwrap();
    let mut out = Outcome::from_reports(std::slice::from_ref(&r));
    out.detail += &format!(" C={:.4} (recorded cap {})", r.value, k.glued_closeness);
    out
}

fn c5() -> Outcome {
    Outcome::from_reports(&[good_closure(1, 1, 2).unwrap()])
}

fn c6() -> Outcome {
    let r: Vec<_> =
        [ProjectorTag::R1, ProjectorTag::R12, ProjectorTag::R123].iter().map(|&t| projector_commutation(1, 1, t).unwrap()).collect();
    Outcome::from_reports(&r)
}

fn c7() -> Outcome {
    let ortho = chi_orthonormality(1, 1).unwrap();
    let ltor1 = chi_three_actions(1, 1).unwrap();
    let ltor2 = chi_two_actions(1, 1).unwrap();
    let ltor2_wide = chi_two_actions(1, 2).unwrap();
    // at n=λ=1 no χ^{·,1} leaves room for the extended chain, so the
    // identity holds vacuously; (1,2) supplies non-vacuous inputs
    let vacuous = ltor2.status == Status::Inconclusive;
    let pass = ortho.passed() && ltor1.passed() && (ltor2.passed() || vacuous) && ltor2_wide.passed();
    let mut out = Outcome::from_reports(&[ortho, ltor1, ltor2, ltor2_wide]);
    out.pass = pass;
    if vacuous {
        out.detail += " (LtoR:2 vacuous at n=λ=1)";
    }
    out
}

fn c8() -> Outcome {
    let k = constants();
    let mut r = Vec::new();
    for n in 1..=2 {
        for l in 1..=2 {
            for t in 1..=2 {
                r.push(exact_pieces(n, l, t, 20, 5).unwrap());
                r.push(ocomp_commutation(n, l, t, 60, 5, &k).unwrap());
            }
        }
    }
    let mut out = Outcome::from_reports(&r);
    let worst = r.iter().filter(|x| x.lemma_id == "simulator.commutation").map(|x| x.value).fold(0.0, f64::max);
    out.detail = format!("8 exact-piece rows and 8 commutation rows, all {}; largest per-query norm {worst:.4}, recorded C = {}",
        if out.pass { "pass" } else { "not pass" }, k.ocomp_commutation);
    if !out.pass {
        out.detail += &format!(" :: {}", Outcome::from_reports(&r.iter().filter(|x| !x.passed()).cloned().collect::<Vec<_>>()).detail);
    }
    out
}

fn c9() -> Outcome {
    let rep = induction_check(1, 1, 4, 5).unwrap();
    // the criterion 8 per-query norm at (1,1), largest over t ∈ {1,2}
    let k = constants();
    let per_query = (1..=2).map(|t| ocomp_commutation(1, 1, t, 60, 5, &k).unwrap().value).fold(0.0, f64::max);
    let g = GluedLayout::new(1, 1, 0).unwrap();
    let sim = Simulator::new(g).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let us: Vec<_> = (0..4).map(|_| haar_sample_with(1 << g.query(), &mut rng).unwrap()).collect();
    let steps = induction(&sim, &us).unwrap();
    let summed_ok = steps.iter().enumerate().all(|(i, s)| s.distance <= (i + 1) as f64 * per_query + 1e-9);
    let mut out = Outcome::from_reports(std::slice::from_ref(&rep));
    out.pass = rep.passed() && summed_ok;
    out.detail += &format!(
        " distances {:?} vs Σ criterion-8 norms {:?}",
        steps.iter().map(|s| format!("{:.3e}", s.distance)).collect::<Vec<_>>(),
        (1..=steps.len()).map(|i| format!("{:.3e}", i as f64 * per_query)).collect::<Vec<_>>()
    );
    out
}

fn c10() -> Outcome {
    let st = Instant::now();
    let (r, _) = gluing_trend(2, &[1, 2, 3], 10_000, 40).unwrap();
    let mut out = Outcome::from_reports(std::slice::from_ref(&r));
    out.detail += &format!(" :: {}", r.note);
    within(out, st, 600.0)
}

fn c11() -> Outcome {
    let r: Vec<_> = (1..=2).map(|t| generalized_pr(1, 1, t).unwrap()).collect();
    let mut out = Outcome::from_reports(&r);
    out.detail += &format!(" :: {}", r.iter().map(|x| x.note.clone()).collect::<Vec<_>>().join(" | "));
    out
}

fn c12() -> Outcome {
    let placement = stretch_placement(3).unwrap();
    let (trend, _) = stretch_trend(100_000, 0).unwrap();
    let note = trend.note.clone();
    let mut out = Outcome::from_reports(&[placement, trend]);
    out.detail += &format!(" :: {note}");
    out
}

fn c13() -> Outcome {
    Outcome::from_reports(&[weingarten_check(2, 100_000, 13).unwrap()])
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome); 13] = [
        (1, "t=1 exactness", c1),
        (2, "partial-isometry spectra", c2),
        (3, "monogamy", c3),
        (4, "glued closeness", c4),
        (5, "good closure", c5),
        (6, "projector commutation", c6),
        (7, "χ-basis lemmas", c7),
        (8, "O_comp commutation", c8),
        (9, "induction contract", c9),
        (10, "end-to-end gluing trend", c10),
        (11, "generalized path recording", c11),
        (12, "stretch demo", c12),
        (13, "Weingarten self-check", c13),
    ];
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, title, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let st = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {title}: {} [{:.1} s]", o.detail, st.elapsed().as_secs_f64());
        match (&o.explained, o.pass) {
            (_, true) => {}
            (Some(why), false) => println!("             explained: {why}"),
            (None, false) => unexpected.push(id),
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexplained failures: {unexpected:?}");
        std::process::exit(1);
    }
}
