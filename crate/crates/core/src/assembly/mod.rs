//! Linear systems of the three decoupled sub-problems and the monolithic scheme.
//!
//! All bilinear forms have constant coefficients, so the region and interface
//! operators are integrated once in [`Assembler::new`]. Each step only combines
//! them with the current Δt and history and applies the strong conditions.

pub mod interface;
pub mod volume;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::fem::{
    edge_quadrature, shape_functions, triangle_quadrature, CsrMatrix, DofMap, EdgeRule, ElementKind,
    SparseSystem, TriangleRule, TripletBuilder,
};
use crate::mesh::{EdgeGeometry, EdgeTag, Region, TriangleMesh};
use crate::model::{
    pseudo_coefficients, BoundaryConditionSet, Field, NitscheParameters, PhysicalParameters,
    PseudoPressureCoefficients, SourceKind,
};
use crate::timestepping::SolutionState;

pub use interface::{interface_terms, InterfaceOperators, InterfaceTerms, Trace};
pub use volume::{LoadVectors, VolumeOperators};

const TRIANGLE_DEGREE: usize = 4;
const LOAD_DEGREE: usize = 6;
const EDGE_DEGREE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementPairing {
    /// Vector P2 for v, U and q; P1 for p_f, ξ and η.
    TaylorHood,
    /// P1 everywhere; needs pressure stabilization.
    P1P1,
}

impl std::str::FromStr for ElementPairing {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "taylor_hood" | "p2p1" => Ok(ElementPairing::TaylorHood),
            "p1p1" => Ok(ElementPairing::P1P1),
            other => Err(format!("unknown element pairing `{other}` (taylor_hood, p1p1)")),
        }
    }
}

/// Dof maps of the six fields; ξ and η share `pseudo`.
#[derive(Debug, Clone)]
pub struct FieldSpaces {
    pub velocity: DofMap,
    pub fluid_pressure: DofMap,
    pub displacement: DofMap,
    pub flux: DofMap,
    pub pseudo: DofMap,
}

impl FieldSpaces {
    pub fn new(mesh: &TriangleMesh, pairing: ElementPairing) -> Self {
        let vec_kind = match pairing {
            ElementPairing::TaylorHood => ElementKind::P2Vector2,
            ElementPairing::P1P1 => ElementKind::P1Vector2,
        };
        let fluid = Some(Region::Fluid);
        let porous = Some(Region::Porous);
        let displacement = crate::fem::build_dof_map(mesh, vec_kind, porous);
        FieldSpaces {
            velocity: crate::fem::build_dof_map(mesh, vec_kind, fluid),
            fluid_pressure: crate::fem::build_dof_map(mesh, ElementKind::P1Scalar, fluid),
            flux: displacement.clone(),
            displacement,
            pseudo: crate::fem::build_dof_map(mesh, ElementKind::P1Scalar, porous),
        }
    }

    pub fn map(&self, field: Field) -> &DofMap {
        match field {
            Field::Velocity => &self.velocity,
            Field::FluidPressure => &self.fluid_pressure,
            Field::Displacement => &self.displacement,
            Field::Flux => &self.flux,
            Field::Xi | Field::Eta => &self.pseudo,
        }
    }

    pub fn len(&self, field: Field) -> usize {
        self.map(field).n_dofs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubProblem {
    Step1Displacement,
    Step2Darcy,
    Step3Stokes,
    Monolithic,
}

impl SubProblem {
    pub fn fields(self) -> &'static [Field] {
        match self {
            SubProblem::Step1Displacement => &[Field::Displacement, Field::Xi],
            SubProblem::Step2Darcy => &[Field::Flux, Field::Eta],
            SubProblem::Step3Stokes => &[Field::Velocity, Field::FluidPressure],
            SubProblem::Monolithic => &[
                Field::Velocity,
                Field::FluidPressure,
                Field::Displacement,
                Field::Xi,
                Field::Flux,
                Field::Eta,
            ],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SubProblem::Step1Displacement => "step 1 (U, xi)",
            SubProblem::Step2Darcy => "step 2 (q, eta)",
            SubProblem::Step3Stokes => "step 3 (v, p_f)",
            SubProblem::Monolithic => "monolithic",
        }
    }
}

/// Contiguous dof ranges of each unknown field in a system.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    blocks: Vec<(Field, Range<usize>)>,
}

impl BlockLayout {
    fn new(spaces: &FieldSpaces, fields: &[Field]) -> Self {
        let mut off = 0;
        let blocks = fields
            .iter()
            .map(|&f| {
                let r = off..off + spaces.len(f);
                off = r.end;
                (f, r)
            })
            .collect();
        BlockLayout { blocks }
    }

    pub fn blocks(&self) -> &[(Field, Range<usize>)] {
        &self.blocks
    }

    pub fn range(&self, field: Field) -> Option<Range<usize>> {
        self.blocks.iter().find(|(f, _)| *f == field).map(|(_, r)| r.clone())
    }

    fn offset(&self, field: Field) -> usize {
        self.range(field).expect("field in layout").start
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |(_, r)| r.end)
    }
}

#[derive(Debug, Clone)]
pub struct SubProblemSystem {
    pub which: SubProblem,
    pub system: SparseSystem,
    pub layout: BlockLayout,
}

impl SubProblemSystem {
    /// The slice of `x` belonging to `field`.
    pub fn part<'a>(&self, x: &'a [f64], field: Field) -> &'a [f64] {
        &x[self.layout.range(field).expect("field in layout")]
    }
}

/// Everything that defines a run apart from the mesh and the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSetup {
    pub params: PhysicalParameters,
    pub nitsche: NitscheParameters,
    pub pairing: ElementPairing,
    pub bc: BoundaryConditionSet,
    pub sources: SourceKind,
}

/// Strongly constrained dofs per field.
#[derive(Debug, Clone)]
pub struct FixedDofs {
    masks: [Vec<bool>; 6],
    /// Fluid-pressure dof pinned to remove the constant mode, if any.
    pub gauge: Option<usize>,
}

fn field_index(f: Field) -> usize {
    Field::ALL.iter().position(|&g| g == f).unwrap()
}

impl FixedDofs {
    pub fn mask(&self, f: Field) -> &[bool] {
        &self.masks[field_index(f)]
    }

    pub fn count(&self, f: Field) -> usize {
        self.mask(f).iter().filter(|&&b| b).count()
    }

    fn new(mesh: &TriangleMesh, spaces: &FieldSpaces, bc: &BoundaryConditionSet) -> Self {
        let mut masks: [Vec<bool>; 6] = Field::ALL.map(|f| vec![false; spaces.len(f)]);
        for tag in EdgeTag::ALL {
            let strong = bc.strong_on(tag);
            if strong.is_empty() {
                continue;
            }
            let edges = mesh.edges_with_tag(tag);
            for &(field, _) in strong {
                let comps = bc.fixed_components(tag, field);
                let map = spaces.map(field);
                let mask = &mut masks[field_index(field)];
                for e in &edges {
                    let cell = map.cell(e.primary.triangle).expect("edge triangle in field region");
                    for a in map.edge_local(e.primary.local_edge) {
                        let d = cell[a];
                        if field.is_vector() {
                            for c in 0..2 {
                                if comps[c] {
                                    mask[2 * d + c] = true;
                                }
                            }
                        } else {
                            mask[d] = true;
                        }
                    }
                }
            }
        }

        // Enclosed fluid with no pressure data leaves the constant pressure undetermined.
        let enclosed = [EdgeTag::FluidIn, EdgeTag::FluidOut, EdgeTag::FluidExt]
            .iter()
            .all(|&t| mesh.edges_with_tag(t).is_empty() || bc.fixed_components(t, Field::Velocity) == [true, true]);
        let p = &mut masks[field_index(Field::FluidPressure)];
        let gauge = if !bc.has_fluid_pressure_data() && enclosed && !p.is_empty() {
            let k = p.iter().position(|&b| !b);
            if let Some(k) = k {
                p[k] = true;
            }
            k
        } else {
            None
        };
        FixedDofs { masks, gauge }
    }
}

/// Homogeneous strong conditions by row and column elimination.
pub fn eliminate(matrix: &CsrMatrix, rhs: &mut [f64], fixed: &[bool]) -> CsrMatrix {
    let n = matrix.n_rows;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(matrix.nnz());
    let mut values = Vec::with_capacity(matrix.nnz());
    row_ptr.push(0);
    for i in 0..n {
        if fixed[i] {
            col_idx.push(i);
            values.push(1.0);
            rhs[i] = 0.0;
        } else {
            for (j, v) in matrix.row(i) {
                if !fixed[j] {
                    col_idx.push(j);
                    values.push(v);
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix {
        n_rows: n,
        n_cols: matrix.n_cols,
        row_ptr,
        col_idx,
        values,
    }
}

/// Block-wise system accumulator.
struct Compose<'a> {
    layout: &'a BlockLayout,
    t: TripletBuilder,
    rhs: Vec<f64>,
}

impl<'a> Compose<'a> {
    fn new(layout: &'a BlockLayout) -> Self {
        let n = layout.dim();
        Compose {
            layout,
            t: TripletBuilder::new(n, n),
            rhs: vec![0.0; n],
        }
    }

    /// `scale * m` into block (row, col).
    fn add(&mut self, row: Field, col: Field, m: &CsrMatrix, scale: f64) {
        self.t.add_csr(m, self.layout.offset(row), self.layout.offset(col), scale);
    }

    /// `scale * mᵀ` into block (row, col).
    fn add_t(&mut self, row: Field, col: Field, m: &CsrMatrix, scale: f64) {
        self.t.add_csr_transposed(m, self.layout.offset(row), self.layout.offset(col), scale);
    }

    fn rhs(&mut self, row: Field) -> &mut [f64] {
        let r = self.layout.range(row).unwrap();
        &mut self.rhs[r]
    }

    fn load(&mut self, row: Field, v: &[f64]) {
        self.rhs(row).iter_mut().zip(v).for_each(|(r, x)| *r += x);
    }

    /// rhs(row) += scale * m x.
    fn mv(&mut self, row: Field, m: &CsrMatrix, x: &[f64], scale: f64) {
        m.matvec_acc(x, scale, self.rhs(row));
    }

    /// rhs(row) += scale * mᵀ x.
    fn mtv(&mut self, row: Field, m: &CsrMatrix, x: &[f64], scale: f64) {
        m.matvec_transposed_acc(x, scale, self.rhs(row));
    }

    fn finish(self, which: SubProblem, fixed: &FixedDofs) -> SubProblemSystem {
        let mut mask = vec![false; self.layout.dim()];
        for (f, r) in self.layout.blocks() {
            mask[r.clone()].copy_from_slice(fixed.mask(*f));
        }
        let mut rhs = self.rhs;
        let matrix = eliminate(&self.t.to_csr(), &mut rhs, &mask);
        SubProblemSystem {
            which,
            system: SparseSystem { matrix, rhs },
            layout: self.layout.clone(),
        }
    }
}

/// Which stabilization operator to return from [`Assembler::stabilization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizationKind {
    /// γ_stab h/(γ_f μ_f) ∫_Γ p ψ, applied to p − p_prev.
    FluidPressure,
    /// γ'_stab γ_f μ_f/h ∫_Γ (v·n)(φ·n), applied to v − v_prev.
    FluidVelocity,
    /// γ'_stab γ_f μ_f/h ∫_Γ (q·n)(r·n), applied to q − q_prev.
    Flux,
    /// γ_q k1 Σ h_T² (∇ξ, ∇w).
    Xi,
    /// γ_q k2 Σ h_T² (∇η, ∇z).
    Eta,
    /// γ_p/μ_f Σ h_T² (∇p, ∇ψ) inside Ω_f.
    InteriorPressure,
}

/// Integrated operators of one problem on one mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    mesh: TriangleMesh,
    setup: ProblemSetup,
    coeffs: PseudoPressureCoefficients,
    spaces: FieldSpaces,
    vol: VolumeOperators,
    iface: InterfaceOperators,
    fixed: FixedDofs,
    tri_rule: TriangleRule,
    load_rule: TriangleRule,
    edge_rule: EdgeRule,
    inflow_edges: Vec<EdgeGeometry>,
}

impl Assembler {
    pub fn new(mesh: TriangleMesh, setup: ProblemSetup) -> Result<Self> {
        setup.params.validate()?;
        setup.nitsche.validate()?;
        let coeffs = pseudo_coefficients(&setup.params)?;
        let resistivity = setup.params.resistivity()?;
        let spaces = FieldSpaces::new(&mesh, setup.pairing);
        let tri_rule = triangle_quadrature(TRIANGLE_DEGREE)?;
        let load_rule = triangle_quadrature(LOAD_DEGREE)?;
        let edge_rule = edge_quadrature(EDGE_DEGREE)?;
        let vol = volume::assemble_volume(&mesh, &spaces, &setup.params, resistivity, &tri_rule);
        let iface = interface::assemble_interface(&mesh, &spaces, &setup.params, &setup.nitsche, &edge_rule);
        let fixed = FixedDofs::new(&mesh, &spaces, &setup.bc);
        if let Some(g) = fixed.gauge {
            log::info!("no fluid-pressure data on an enclosed fluid region; pinning p_f dof {g}");
        }
        let inflow_edges = mesh.edges_with_tag(EdgeTag::FluidIn);
        Ok(Assembler {
            mesh,
            setup,
            coeffs,
            spaces,
            vol,
            iface,
            fixed,
            tri_rule,
            load_rule,
            edge_rule,
            inflow_edges,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn setup(&self) -> &ProblemSetup {
        &self.setup
    }

    pub fn params(&self) -> &PhysicalParameters {
        &self.setup.params
    }

    pub fn nitsche(&self) -> &NitscheParameters {
        &self.setup.nitsche
    }

    pub fn coeffs(&self) -> &PseudoPressureCoefficients {
        &self.coeffs
    }

    pub fn spaces(&self) -> &FieldSpaces {
        &self.spaces
    }

    pub fn volume(&self) -> &VolumeOperators {
        &self.vol
    }

    pub fn interface(&self) -> &InterfaceOperators {
        &self.iface
    }

    pub fn fixed(&self) -> &FixedDofs {
        &self.fixed
    }

    pub fn triangle_rule(&self) -> &TriangleRule {
        &self.tri_rule
    }

    pub fn edge_rule(&self) -> &EdgeRule {
        &self.edge_rule
    }

    /// Local interface blocks on one edge; see [`interface_terms`].
    pub fn interface_terms(&self, edge: &EdgeGeometry, unknown: Field, test: Field) -> Result<InterfaceTerms> {
        interface_terms(
            &self.mesh,
            &self.spaces,
            &self.setup.params,
            &self.setup.nitsche,
            edge,
            &self.edge_rule,
            unknown,
            test,
        )
    }

    /// Global stabilization operator with its weight applied.
    pub fn stabilization(&self, kind: StabilizationKind) -> CsrMatrix {
        let n = &self.setup.nitsche;
        let mu_f = self.setup.params.mu_f;
        let scaled = |m: &CsrMatrix, s: f64| {
            let mut m = m.clone();
            m.values.iter_mut().for_each(|v| *v *= s);
            m
        };
        let v = Trace::Velocity as usize;
        let q = Trace::Flux as usize;
        match kind {
            StabilizationKind::FluidPressure => {
                scaled(&self.iface.mass_p_h, n.gamma_stab / (n.gamma_f * mu_f))
            }
            StabilizationKind::FluidVelocity => scaled(&self.iface.pen_n[v][v], n.gamma_stab_prime),
            StabilizationKind::Flux => scaled(&self.iface.pen_n[q][q], n.gamma_stab_prime),
            StabilizationKind::Xi => scaled(&self.vol.kh_s, n.gamma_q * self.coeffs.k1),
            StabilizationKind::Eta => scaled(&self.vol.kh_s, n.gamma_q * self.coeffs.k2),
            StabilizationKind::InteriorPressure => scaled(&self.vol.kh_f, n.gamma_p / mu_f),
        }
    }

    pub fn loads(&self, t: f64) -> LoadVectors {
        volume::assemble_loads(&self.mesh, &self.spaces, &self.setup.params, &self.setup.sources, &self.load_rule, t)
    }

    /// ⟨−p_in(t) n, φ⟩ over the fluid inlet.
    pub fn inflow_load(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.spaces.velocity.n_dofs()];
        let p_in = &self.setup.bc.p_in;
        if p_in.is_zero() {
            return Ok(out);
        }
        let map = &self.spaces.velocity;
        for e in &self.inflow_edges {
            let (tri, k) = (e.primary.triangle, e.primary.local_edge);
            let cell = map.cell(tri).expect("inlet triangle in fluid");
            let a = self.mesh.nodes()[e.vertices[0]];
            let b = self.mesh.nodes()[e.vertices[1]];
            for (p, &w) in self.edge_rule.points.iter().zip(&self.edge_rule.weights) {
                let s = p[1];
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let bary = interface::bary_on(&self.mesh, tri, k, e.vertices, s);
                let (phi, _) = shape_functions(map.kind(), bary);
                let val = -p_in.eval(x, t)? * w * e.length;
                for l in map.edge_local(k) {
                    for c in 0..2 {
                        out[2 * cell[l] + c] += val * e.normal[c] * phi[l];
                    }
                }
            }
        }
        Ok(out)
    }

    fn layout(&self, which: SubProblem) -> BlockLayout {
        BlockLayout::new(&self.spaces, which.fields())
    }

    fn check_state(&self, s: &SolutionState) -> Result<()> {
        let ok = s.v.len() == self.spaces.len(Field::Velocity)
            && s.p_f.len() == self.spaces.len(Field::FluidPressure)
            && s.u.len() == self.spaces.len(Field::Displacement)
            && s.u_rate.len() == self.spaces.len(Field::Displacement)
            && s.q.len() == self.spaces.len(Field::Flux)
            && s.xi.len() == self.spaces.len(Field::Xi)
            && s.eta.len() == self.spaces.len(Field::Eta);
        if ok {
            Ok(())
        } else {
            Err(Error::Sequencing("previous state does not match the field spaces".into()))
        }
    }

    fn check_len(&self, v: &[f64], field: Field, what: &str) -> Result<()> {
        if v.len() == self.spaces.len(field) {
            Ok(())
        } else {
            Err(Error::Sequencing(format!(
                "{what} has {} entries, expected {}",
                v.len(),
                self.spaces.len(field)
            )))
        }
    }

    fn check_dt(dt: f64) -> Result<()> {
        if dt > 0.0 && dt.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("time step must be positive, got {dt}")))
        }
    }

    /// Step 1: displacement and ξ with lagged fluid, flux and η data.
    pub fn assemble_step1(&self, prev: &SolutionState, dt: f64) -> Result<SubProblemSystem> {
        Self::check_dt(dt)?;
        self.check_state(prev)?;
        let layout = self.layout(SubProblem::Step1Displacement);
        let mut c = Compose::new(&layout);
        let (o, i, k) = (&self.vol, &self.iface, &self.coeffs);
        let g_q = self.setup.nitsche.gamma_q;
        let (tv, tu, tq) = (0, 1, 2);
        use Field::*;

        c.add(Displacement, Displacement, &o.a_p, 1.0);
        c.add(Displacement, Displacement, &i.pen_n[tu][tu], 1.0 / dt);
        c.add(Displacement, Displacement, &i.pen_t[tu][tu], 1.0 / dt);
        c.add_t(Displacement, Xi, &o.div_u, -1.0);
        c.add(Xi, Displacement, &o.div_u, 1.0);
        c.add(Xi, Xi, &o.m_s, k.k3);
        c.add(Xi, Xi, &o.kh_s, g_q * k.k1);

        let loads = self.loads(prev.time + dt);
        c.load(Displacement, &loads.h);
        c.mv(Displacement, &i.pen_n[tu][tu], &prev.u, 1.0 / dt);
        c.mv(Displacement, &i.pen_t[tu][tu], &prev.u, 1.0 / dt);
        c.mv(Displacement, &i.cons[tu], &prev.v, -1.0);
        c.mv(Displacement, &i.pen_n[tu][tv], &prev.v, 1.0);
        c.mv(Displacement, &i.pen_t[tu][tv], &prev.v, 1.0);
        c.mv(Displacement, &i.cons_p[tu], &prev.p_f, 1.0);
        c.mv(Displacement, &i.pen_n[tu][tq], &prev.q, -1.0);
        c.mv(Xi, &o.m_s, &prev.eta, k.k1);
        Ok(c.finish(SubProblem::Step1Displacement, &self.fixed))
    }

    /// Step 2: Darcy flux and η given ξ^n.
    pub fn assemble_step2(&self, prev: &SolutionState, xi_new: &[f64], dt: f64) -> Result<SubProblemSystem> {
        Self::check_dt(dt)?;
        self.check_state(prev)?;
        self.check_len(xi_new, Field::Xi, "xi from step 1")?;
        let layout = self.layout(SubProblem::Step2Darcy);
        let mut c = Compose::new(&layout);
        let (o, i, k) = (&self.vol, &self.iface, &self.coeffs);
        let n = &self.setup.nitsche;
        let (tv, tu, tq) = (0, 1, 2);
        use Field::*;

        c.add(Flux, Flux, &o.m_q, 1.0);
        c.add(Flux, Flux, &i.pen_n[tq][tq], 1.0 + n.gamma_stab_prime);
        c.add_t(Flux, Eta, &o.div_q, -k.k2);
        c.add(Eta, Flux, &o.div_q, 1.0);
        c.add(Eta, Eta, &o.m_s, 1.0 / dt);
        c.add(Eta, Eta, &o.kh_s, n.gamma_q * k.k2);

        let loads = self.loads(prev.time + dt);
        c.mtv(Flux, &o.div_q, xi_new, k.k1);
        c.mv(Flux, &i.cons[tq], &prev.v, -1.0);
        c.mv(Flux, &i.pen_n[tq][tv], &prev.v, 1.0);
        c.mv(Flux, &i.cons_p[tq], &prev.p_f, 1.0);
        c.mv(Flux, &i.pen_n[tq][tu], &prev.u_rate, -1.0);
        c.mv(Flux, &i.pen_n[tq][tq], &prev.q, n.gamma_stab_prime);
        c.load(Eta, &loads.s);
        c.mv(Eta, &o.m_s, &prev.eta, 1.0 / dt);
        Ok(c.finish(SubProblem::Step2Darcy, &self.fixed))
    }

    /// Step 3: Stokes given d_tU^n and q^n, with the fluid traction lagged.
    pub fn assemble_step3(
        &self,
        prev: &SolutionState,
        u_new: &[f64],
        q_new: &[f64],
        dt: f64,
    ) -> Result<SubProblemSystem> {
        Self::check_dt(dt)?;
        self.check_state(prev)?;
        self.check_len(u_new, Field::Displacement, "U from step 1")?;
        self.check_len(q_new, Field::Flux, "q from step 2")?;
        let layout = self.layout(SubProblem::Step3Stokes);
        let mut c = Compose::new(&layout);
        let (o, i) = (&self.vol, &self.iface);
        let n = &self.setup.nitsche;
        let sig = n.varsigma;
        let mu_f = self.setup.params.mu_f;
        let s_fp = n.gamma_stab / (n.gamma_f * mu_f);
        let (tv, tu, tq) = (0, 1, 2);
        use Field::*;

        c.add(Velocity, Velocity, &o.a_f, 1.0);
        c.add_t(Velocity, Velocity, &i.cons[tv], -sig);
        c.add(Velocity, Velocity, &i.pen_n[tv][tv], 1.0 + n.gamma_stab_prime);
        c.add(Velocity, Velocity, &i.pen_t[tv][tv], 1.0);
        c.add_t(Velocity, FluidPressure, &o.div_f, -1.0);
        c.add(FluidPressure, Velocity, &o.div_f, 1.0);
        c.add_t(FluidPressure, Velocity, &i.cons_p[tv], -1.0);
        c.add(FluidPressure, FluidPressure, &o.kh_f, n.gamma_p / mu_f);
        c.add(FluidPressure, FluidPressure, &i.mass_p_h, s_fp);

        let t = prev.time + dt;
        let loads = self.loads(t);
        let rate: Vec<f64> = u_new.iter().zip(&prev.u).map(|(a, b)| (a - b) / dt).collect();
        c.load(Velocity, &loads.f);
        c.load(Velocity, &self.inflow_load(t)?);
        c.mv(Velocity, &i.cons[tv], &prev.v, 1.0);
        c.mv(Velocity, &i.cons_p[tv], &prev.p_f, -1.0);
        c.mv(Velocity, &i.pen_n[tv][tv], &prev.v, n.gamma_stab_prime);
        c.mv(Velocity, &i.pen_n[tv][tu], &rate, 1.0);
        c.mv(Velocity, &i.pen_t[tv][tu], &rate, 1.0);
        c.mtv(Velocity, &i.cons[tu], &rate, -sig);
        c.mv(Velocity, &i.pen_n[tv][tq], q_new, 1.0);
        c.mtv(Velocity, &i.cons[tq], q_new, -sig);
        c.load(FluidPressure, &loads.g);
        c.mtv(FluidPressure, &i.cons_p[tu], &rate, -1.0);
        c.mtv(FluidPressure, &i.cons_p[tq], q_new, -1.0);
        c.mv(FluidPressure, &i.mass_p_h, &prev.p_f, s_fp);
        Ok(c.finish(SubProblem::Step3Stokes, &self.fixed))
    }

    /// The fully coupled implicit step in (v, p_f, U, ξ, q, η).
    pub fn assemble_monolithic(&self, prev: &SolutionState, dt: f64) -> Result<SubProblemSystem> {
        Self::check_dt(dt)?;
        self.check_state(prev)?;
        let layout = self.layout(SubProblem::Monolithic);
        let mut c = Compose::new(&layout);
        let (o, i, k) = (&self.vol, &self.iface, &self.coeffs);
        let n = &self.setup.nitsche;
        let sig = n.varsigma;
        let mu_f = self.setup.params.mu_f;
        let (tv, tu, tq) = (0, 1, 2);
        let inv = 1.0 / dt;
        use Field::*;

        // momentum
        c.add(Velocity, Velocity, &o.a_f, 1.0);
        c.add(Velocity, Velocity, &i.cons[tv], -1.0);
        c.add_t(Velocity, Velocity, &i.cons[tv], -sig);
        c.add(Velocity, Velocity, &i.pen_n[tv][tv], 1.0);
        c.add(Velocity, Velocity, &i.pen_t[tv][tv], 1.0);
        c.add_t(Velocity, FluidPressure, &o.div_f, -1.0);
        c.add(Velocity, FluidPressure, &i.cons_p[tv], 1.0);
        c.add(Velocity, Displacement, &i.pen_n[tv][tu], -inv);
        c.add(Velocity, Displacement, &i.pen_t[tv][tu], -inv);
        c.add_t(Velocity, Displacement, &i.cons[tu], sig * inv);
        c.add(Velocity, Flux, &i.pen_n[tv][tq], -1.0);
        c.add_t(Velocity, Flux, &i.cons[tq], sig);

        // fluid mass
        c.add(FluidPressure, Velocity, &o.div_f, 1.0);
        c.add_t(FluidPressure, Velocity, &i.cons_p[tv], -1.0);
        c.add_t(FluidPressure, Displacement, &i.cons_p[tu], inv);
        c.add_t(FluidPressure, Flux, &i.cons_p[tq], 1.0);
        c.add(FluidPressure, FluidPressure, &o.kh_f, n.gamma_p / mu_f);

        // structure
        c.add(Displacement, Velocity, &i.cons[tu], 1.0);
        c.add(Displacement, Velocity, &i.pen_n[tu][tv], -1.0);
        c.add(Displacement, Velocity, &i.pen_t[tu][tv], -1.0);
        c.add(Displacement, FluidPressure, &i.cons_p[tu], -1.0);
        c.add(Displacement, Displacement, &o.a_p, 1.0);
        c.add(Displacement, Displacement, &i.pen_n[tu][tu], inv);
        c.add(Displacement, Displacement, &i.pen_t[tu][tu], inv);
        c.add(Displacement, Flux, &i.pen_n[tu][tq], 1.0);
        c.add_t(Displacement, Xi, &o.div_u, -1.0);

        // volumetric strain
        c.add(Xi, Displacement, &o.div_u, 1.0);
        c.add(Xi, Xi, &o.m_s, k.k3);
        c.add(Xi, Xi, &o.kh_s, n.gamma_q * k.k1);
        c.add(Xi, Eta, &o.m_s, -k.k1);

        // Darcy
        c.add(Flux, Velocity, &i.cons[tq], 1.0);
        c.add(Flux, Velocity, &i.pen_n[tq][tv], -1.0);
        c.add(Flux, FluidPressure, &i.cons_p[tq], -1.0);
        c.add(Flux, Displacement, &i.pen_n[tq][tu], inv);
        c.add(Flux, Flux, &o.m_q, 1.0);
        c.add(Flux, Flux, &i.pen_n[tq][tq], 1.0);
        c.add_t(Flux, Xi, &o.div_q, -k.k1);
        c.add_t(Flux, Eta, &o.div_q, -k.k2);

        // storage
        c.add(Eta, Flux, &o.div_q, 1.0);
        c.add(Eta, Eta, &o.m_s, inv);
        c.add(Eta, Eta, &o.kh_s, n.gamma_q * k.k2);

        let t = prev.time + dt;
        let loads = self.loads(t);
        c.load(Velocity, &loads.f);
        c.load(Velocity, &self.inflow_load(t)?);
        c.mv(Velocity, &i.pen_n[tv][tu], &prev.u, -inv);
        c.mv(Velocity, &i.pen_t[tv][tu], &prev.u, -inv);
        c.mtv(Velocity, &i.cons[tu], &prev.u, sig * inv);
        c.load(FluidPressure, &loads.g);
        c.mtv(FluidPressure, &i.cons_p[tu], &prev.u, inv);
        c.load(Displacement, &loads.h);
        c.mv(Displacement, &i.pen_n[tu][tu], &prev.u, inv);
        c.mv(Displacement, &i.pen_t[tu][tu], &prev.u, inv);
        c.mv(Flux, &i.pen_n[tq][tu], &prev.u, inv);
        c.load(Eta, &loads.s);
        c.mv(Eta, &o.m_s, &prev.eta, inv);
        Ok(c.finish(SubProblem::Monolithic, &self.fixed))
    }
}

#[cfg(test)]
mod tests;
