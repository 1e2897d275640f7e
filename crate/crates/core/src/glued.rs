//! The glued construction G = U³_AB · U²_BC · U¹_AB and its purifications on
//! sextuple databases ⟨L₁, R₁, L₂, R₂, L₃, R₃⟩.
//!
//! Components 1 and 3 read and write the AB window (n+λ bits, A high), and
//! component 2 the BC window. Stored pairs are window strings, so B is the
//! low λ bits of a component-1/3 string and the high λ bits of a component-2
//! string.

use crate::error::{Error, Result};
use crate::linalg::{embed_operator, DenseOperator, RegisterLayout};
use crate::path_recording::{
    enumerate_single_dbs, record, two_sided, two_sided_dag, unrecord, Arity, DbKey, ExclusionRule, Half,
    PurifiedState, Side, Source, SystemLayout, Window, MAX_WIDTH,
};
use smallvec::SmallVec;

pub const L1: u8 = 0;
pub const R1: u8 = 1;
pub const L2: u8 = 2;
pub const R2: u8 = 3;
pub const L3: u8 = 4;
pub const R3: u8 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GluedLayout {
    pub n: u32,
    pub lambda: u32,
    pub ancilla: u32,
}

impl GluedLayout {
    pub fn new(n: u32, lambda: u32, ancilla: u32) -> Result<Self> {
        if n == 0 || lambda == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if 2 * n + lambda > MAX_WIDTH {
            return Err(Error::TooLarge { what: "query register".into(), size: (2 * n + lambda) as usize, cap: MAX_WIDTH as usize });
        }
        Ok(GluedLayout { n, lambda, ancilla })
    }

    pub fn query(&self) -> u32 {
        2 * self.n + self.lambda
    }

    pub fn component_width(&self) -> u32 {
        self.n + self.lambda
    }

    pub fn system(&self) -> SystemLayout {
        SystemLayout::new(self.query(), self.ancilla)
    }

    pub fn registers(&self) -> RegisterLayout {
        RegisterLayout::glued(self.n as usize, self.lambda as usize, self.ancilla as usize)
    }

    /// AB for components 1 and 3, BC for component 2.
    pub fn window(&self, component: usize) -> Window {
        if component == 2 {
            Window { shift: 0, width: self.component_width() }
        } else {
            Window { shift: self.n, width: self.component_width() }
        }
    }

    /// Bit offset of B inside a stored component string.
    pub fn b_shift(&self, component: usize) -> u32 {
        if component == 2 {
            self.n
        } else {
            0
        }
    }

    pub fn empty_state(&self, sys: u64) -> PurifiedState {
        PurifiedState::basis(self.system(), Arity::Sextuple, sys, DbKey::empty())
    }
}

pub fn slot(component: usize, half: Half) -> u8 {
    let base = 2 * (component as u8 - 1);
    match half {
        Half::L => base,
        Half::R => base + 1,
    }
}

fn check_component(component: usize) -> Result<()> {
    if !(1..=3).contains(&component) {
        return Err(Error::Invalid(format!("component {component} not in 1..=3")));
    }
    Ok(())
}

/// U³ on AB · U² on BC · U¹ on AB.
pub fn glued_unitary(u1: &DenseOperator, u2: &DenseOperator, u3: &DenseOperator, g: &GluedLayout) -> Result<DenseOperator> {
    let d = 1usize << g.component_width();
    for u in [u1, u2, u3] {
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch(u.nrows(), d));
        }
    }
    let regs = RegisterLayout::new(&[("A", g.n as usize), ("B", g.lambda as usize), ("C", g.n as usize)]);
    let a = embed_operator(u1, &regs, &["A", "B"])?;
    let b = embed_operator(u2, &regs, &["B", "C"])?;
    let c = embed_operator(u3, &regs, &["A", "B"])?;
    Ok(c * b * a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Single-oracle V_L, V_R on each window.
    Plain,
    /// The middle-bit restricted V^{(i),mid}.
    Mid,
}

fn full_sources(window: Window, list: &[(u8, Side)]) -> SmallVec<[Source; 6]> {
    list.iter().map(|&(slot, side)| Source { slot, side, shift: 0, width: window.width }).collect()
}

/// Im₁: B bits of Im(L₁ ∪ R₃), Im(L₂ ∪ R₂) and Dom(L₂ ∪ R₂).
fn im1_sources(g: &GluedLayout) -> SmallVec<[Source; 6]> {
    let (n, lam) = (g.n, g.lambda);
    let s = |slot, side, shift| Source { slot, side, shift, width: lam };
    [
        s(L1, Side::Out, 0),
        s(R3, Side::Out, 0),
        s(L2, Side::Out, n),
        s(R2, Side::Out, n),
        s(L2, Side::In, n),
        s(R2, Side::In, n),
    ]
    .into_iter()
    .collect()
}

/// Im₂: B bits of Im(L₃ ∪ R₁).
fn im2_sources(g: &GluedLayout) -> SmallVec<[Source; 6]> {
    let lam = g.lambda;
    [Source { slot: L3, side: Side::Out, shift: 0, width: lam }, Source { slot: R1, side: Side::Out, shift: 0, width: lam }]
        .into_iter()
        .collect()
}

/// Insertion rule of V^i_X (plain) or V^{(i),mid}_X.
pub fn component_rule(g: &GluedLayout, component: usize, half: Half, variant: Variant) -> Result<ExclusionRule> {
    check_component(component)?;
    let window = g.window(component);
    let (l, r) = (slot(component, Half::L), slot(component, Half::R));
    let target = slot(component, half);
    Ok(match variant {
        Variant::Plain => {
            let sources = match half {
                Half::L => full_sources(window, &[(l, Side::Out), (r, Side::In)]),
                Half::R => full_sources(window, &[(l, Side::In), (r, Side::Out)]),
            };
            ExclusionRule { slot: target, window, sources, target_shift: 0, target_width: window.width }
        }
        Variant::Mid => {
            let uses_im2 = matches!((component, half), (1, Half::R) | (3, Half::L));
            let sources = if uses_im2 { im2_sources(g) } else { im1_sources(g) };
            ExclusionRule { slot: target, window, sources, target_shift: g.b_shift(component), target_width: g.lambda }
        }
    })
}

fn require(psi: &PurifiedState, g: &GluedLayout) -> Result<()> {
    if psi.arity != Arity::Sextuple {
        return Err(Error::ArityMismatch);
    }
    if psi.layout != g.system() {
        return Err(Error::WidthMismatch { expected: g.query() as usize, got: psi.layout.query as usize });
    }
    Ok(())
}

pub fn apply_component(
    psi: &PurifiedState,
    g: &GluedLayout,
    component: usize,
    half: Half,
    dagger: bool,
    variant: Variant,
) -> Result<PurifiedState> {
    require(psi, g)?;
    let rule = component_rule(g, component, half, variant)?;
    if dagger {
        unrecord(psi, &rule)
    } else {
        record(psi, &rule)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProjectorTag {
    R1,
    R12,
    R123,
    L3,
    L32,
    L321,
    /// Π^{𝔩,k}, k ∈ 1..=4: which prefix of V_R¹V_R²V_R³ the state lies in.
    Branch(u8),
}

/// The twelve component rules of one variant.
pub struct GluedOps {
    pub layout: GluedLayout,
    pub variant: Variant,
    l: [ExclusionRule; 3],
    r: [ExclusionRule; 3],
}

impl GluedOps {
    pub fn new(g: GluedLayout, variant: Variant) -> Result<Self> {
        let mk = |i, h| component_rule(&g, i, h, variant);
        Ok(GluedOps {
            layout: g,
            variant,
            l: [mk(1, Half::L)?, mk(2, Half::L)?, mk(3, Half::L)?],
            r: [mk(1, Half::R)?, mk(2, Half::R)?, mk(3, Half::R)?],
        })
    }

    pub fn rule(&self, component: usize, half: Half) -> &ExclusionRule {
        match half {
            Half::L => &self.l[component - 1],
            Half::R => &self.r[component - 1],
        }
    }

    fn fwd(&self, psi: &PurifiedState, chain: &[(usize, Half)]) -> Result<PurifiedState> {
        let mut s = psi.clone();
        for &(i, h) in chain {
            s = record(&s, self.rule(i, h))?;
        }
        Ok(s)
    }

    fn back(&self, psi: &PurifiedState, chain: &[(usize, Half)]) -> Result<PurifiedState> {
        let mut s = psi.clone();
        for &(i, h) in chain {
            s = unrecord(&s, self.rule(i, h))?;
        }
        Ok(s)
    }

    /// X_{c₁} ⋯ X_{c_k} X_{c_k}† ⋯ X_{c₁}†.
    fn chain_projector(&self, psi: &PurifiedState, chain: &[(usize, Half)]) -> Result<PurifiedState> {
        let down = self.back(psi, chain)?;
        let rev: Vec<_> = chain.iter().rev().cloned().collect();
        self.fwd(&down, &rev)
    }

    pub fn projector(&self, psi: &PurifiedState, tag: ProjectorTag) -> Result<PurifiedState> {
        require(psi, &self.layout)?;
        use Half::{L, R};
        match tag {
            ProjectorTag::R1 => self.chain_projector(psi, &[(1, R)]),
            ProjectorTag::R12 => self.chain_projector(psi, &[(1, R), (2, R)]),
            ProjectorTag::R123 => self.chain_projector(psi, &[(1, R), (2, R), (3, R)]),
            ProjectorTag::L3 => self.chain_projector(psi, &[(3, L)]),
            ProjectorTag::L32 => self.chain_projector(psi, &[(3, L), (2, L)]),
            ProjectorTag::L321 => self.chain_projector(psi, &[(3, L), (2, L), (1, L)]),
            ProjectorTag::Branch(k) => {
                let p = |t| self.projector(psi, t);
                match k {
                    1 => Ok(psi.minus(&p(ProjectorTag::R1)?)),
                    2 => Ok(p(ProjectorTag::R1)?.minus(&p(ProjectorTag::R12)?)),
                    3 => Ok(p(ProjectorTag::R12)?.minus(&p(ProjectorTag::R123)?)),
                    4 => p(ProjectorTag::R123),
                    _ => Err(Error::Invalid(format!("branch {k} not in 1..=4"))),
                }
            }
        }
    }

    /// The four branch outputs of the forward operator, in display order.
    pub fn branches(&self, psi: &PurifiedState) -> Result<[PurifiedState; 4]> {
        require(psi, &self.layout)?;
        use Half::{L, R};
        // right-side classification, sharing the peeled states
        let a1 = self.back(psi, &[(1, R)])?;
        let a12 = self.back(&a1, &[(2, R)])?;
        let a123 = self.back(&a12, &[(3, R)])?;
        let p1 = self.fwd(&a1, &[(1, R)])?;
        let p12 = self.fwd(&a12, &[(2, R), (1, R)])?;
        let p123 = self.fwd(&a123, &[(3, R), (2, R), (1, R)])?;

        let b1 = self.fwd(&psi.minus(&p1), &[(1, L), (2, L), (3, L)])?;
        let out1 = self.chain_projector(&b1, &[(3, L), (2, L), (1, L)])?;

        let b2 = self.back(&p1.minus(&p12), &[(1, R)])?;
        let b2 = self.fwd(&b2, &[(2, L), (3, L)])?;
        let out2 = self
            .chain_projector(&b2, &[(3, L), (2, L)])?
            .minus(&self.chain_projector(&b2, &[(3, L), (2, L), (1, L)])?);

        let b3 = self.back(&p12.minus(&p123), &[(1, R), (2, R)])?;
        let b3 = self.fwd(&b3, &[(3, L)])?;
        let out3 = self.chain_projector(&b3, &[(3, L)])?.minus(&self.chain_projector(&b3, &[(3, L), (2, L)])?);

        let b4 = self.back(&p123, &[(1, R), (2, R), (3, R)])?;
        let out4 = b4.minus(&self.chain_projector(&b4, &[(3, L)])?);
        Ok([out1, out2, out3, out4])
    }

    /// V^glued (plain) or W^glued (mid).
    pub fn apply(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        let [a, b, c, d] = self.branches(psi)?;
        Ok(a.plus(&b).plus(&c).plus(&d))
    }

    /// The four branch outputs of the adjoint, mirroring [`Self::branches`].
    pub fn branches_dag(&self, psi: &PurifiedState) -> Result<[PurifiedState; 4]> {
        require(psi, &self.layout)?;
        use Half::{L, R};
        let c3 = self.back(psi, &[(3, L)])?;
        let c32 = self.back(&c3, &[(2, L)])?;
        let c321 = self.back(&c32, &[(1, L)])?;
        let q3 = self.fwd(&c3, &[(3, L)])?;
        let q32 = self.fwd(&c32, &[(2, L), (3, L)])?;
        let q321 = self.fwd(&c321, &[(1, L), (2, L), (3, L)])?;

        let b1 = self.back(&q321, &[(3, L), (2, L), (1, L)])?;
        let out1 = b1.minus(&self.chain_projector(&b1, &[(1, R)])?);

        let b2 = self.back(&q32.minus(&q321), &[(3, L), (2, L)])?;
        let b2 = self.fwd(&b2, &[(1, R)])?;
        let out2 = self.chain_projector(&b2, &[(1, R)])?.minus(&self.chain_projector(&b2, &[(1, R), (2, R)])?);

        let b3 = self.back(&q3.minus(&q32), &[(3, L)])?;
        let b3 = self.fwd(&b3, &[(2, R), (1, R)])?;
        let out3 = self
            .chain_projector(&b3, &[(1, R), (2, R)])?
            .minus(&self.chain_projector(&b3, &[(1, R), (2, R), (3, R)])?);

        let b4 = self.fwd(&psi.minus(&q3), &[(3, R), (2, R), (1, R)])?;
        let out4 = self.chain_projector(&b4, &[(1, R), (2, R), (3, R)])?;
        Ok([out1, out2, out3, out4])
    }

    pub fn apply_dag(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        let [a, b, c, d] = self.branches_dag(psi)?;
        Ok(a.plus(&b).plus(&c).plus(&d))
    }

    /// Two-sided V^i = V^i_L(I − V^i_R V^i_R†) + (I − V^i_L V^i_L†) V^i_R†.
    pub fn component_v(&self, psi: &PurifiedState, component: usize, dagger: bool) -> Result<PurifiedState> {
        require(psi, &self.layout)?;
        check_component(component)?;
        let (l, r) = (self.rule(component, Half::L), self.rule(component, Half::R));
        if dagger {
            two_sided_dag(psi, l, r)
        } else {
            two_sided(psi, l, r)
        }
    }

    /// V³V²V¹.
    pub fn sequential(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        let a = self.component_v(psi, 1, false)?;
        let b = self.component_v(&a, 2, false)?;
        self.component_v(&b, 3, false)
    }

    /// (V³V²V¹)† = V¹†V²†V³†.
    pub fn sequential_dag(&self, psi: &PurifiedState) -> Result<PurifiedState> {
        let a = self.component_v(psi, 3, true)?;
        let b = self.component_v(&a, 2, true)?;
        self.component_v(&b, 1, true)
    }
}

pub fn apply_glued_projector(psi: &PurifiedState, g: &GluedLayout, tag: ProjectorTag, variant: Variant) -> Result<PurifiedState> {
    GluedOps::new(*g, variant)?.projector(psi, tag)
}

pub fn apply_v_glued(psi: &PurifiedState, g: &GluedLayout, variant: Variant) -> Result<PurifiedState> {
    GluedOps::new(*g, variant)?.apply(psi)
}

pub fn apply_v_glued_dag(psi: &PurifiedState, g: &GluedLayout, variant: Variant) -> Result<PurifiedState> {
    GluedOps::new(*g, variant)?.apply_dag(psi)
}

/// Sextuple databases in which each listed component i holds |L_i| + |R_i| ≤ t
/// injective pairs and every other component is empty.
pub fn enumerate_sextuple_dbs(g: &GluedLayout, components: &[usize], t: usize) -> Result<Vec<DbKey>> {
    for &c in components {
        check_component(c)?;
    }
    let singles = enumerate_single_dbs(g.component_width(), t);
    let mut out = vec![DbKey::empty()];
    for &c in components {
        let mut next = Vec::with_capacity(out.len() * singles.len());
        for base in &out {
            for s in &singles {
                let mut d = base.clone();
                for (sl, x, y) in s.entries() {
                    d = d.with(slot(c, if sl == 0 { Half::L } else { Half::R }), x, y)?;
                }
                next.push(d);
            }
        }
        out = next;
    }
    out.sort();
    Ok(out)
}
