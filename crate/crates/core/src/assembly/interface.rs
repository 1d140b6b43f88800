//! Nitsche coupling integrals on Γ.
//!
//! Every block is a plain edge integral without the sign it carries in the
//! scheme; the sub-problem assemblers apply the signs. The normal `n` points
//! out of the fluid and `τ` is `n` rotated by +90°.

use crate::error::{Error, Result};
use crate::fem::geometry::edge_point_bary;
use crate::fem::{shape_functions, AffineTriangle, CsrMatrix, DofMap, EdgeRule, TripletBuilder};
use crate::mesh::{EdgeGeometry, EdgeTag, TriangleMesh};
use crate::model::{CouplingMode, Field, NitscheParameters, PhysicalParameters};
use crate::parallel;

use super::volume::vector_dofs;
use super::FieldSpaces;

/// Vector fields with a trace on Γ, in block index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trace {
    Velocity = 0,
    Displacement = 1,
    Flux = 2,
}

impl Trace {
    pub const ALL: [Trace; 3] = [Trace::Velocity, Trace::Displacement, Trace::Flux];

    pub fn from_field(f: Field) -> Option<Trace> {
        match f {
            Field::Velocity => Some(Trace::Velocity),
            Field::Displacement => Some(Trace::Displacement),
            Field::Flux => Some(Trace::Flux),
            _ => None,
        }
    }

    fn has_tangential(self) -> bool {
        self != Trace::Flux
    }
}

/// Penalty and consistency weights for one coupling mode.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Weights {
    /// γ_f μ_f; divided by the local edge length.
    pub normal: f64,
    /// Tangential penalty: γ_f μ_f / h, or a fixed β.
    pub tangential: TangentialWeight,
    /// 1 when the tangential traction enters the consistency term.
    pub c_t: f64,
    pub active: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum TangentialWeight {
    PerLength(f64),
    Fixed(f64),
}

impl Weights {
    pub fn new(params: &PhysicalParameters, nitsche: &NitscheParameters) -> Self {
        let normal = nitsche.gamma_f * params.mu_f;
        match nitsche.mode {
            CouplingMode::NitscheStar => Weights {
                normal,
                tangential: TangentialWeight::PerLength(normal),
                c_t: 1.0,
                active: true,
            },
            CouplingMode::BjsPlus => Weights {
                normal,
                tangential: TangentialWeight::Fixed(params.beta),
                c_t: 0.0,
                active: true,
            },
            CouplingMode::Uncoupled => Weights {
                normal,
                tangential: TangentialWeight::PerLength(normal),
                c_t: 1.0,
                active: false,
            },
        }
    }

    pub fn normal_on(&self, h: f64) -> f64 {
        self.normal / h
    }

    pub fn tangential_on(&self, h: f64) -> f64 {
        match self.tangential {
            TangentialWeight::PerLength(w) => w / h,
            TangentialWeight::Fixed(b) => b,
        }
    }
}

struct VectorTrace {
    dofs: Vec<usize>,
    /// Per quadrature point, per local vector function.
    vals: Vec<Vec<[f64; 2]>>,
}

/// Traces of all basis functions living on one interface edge.
pub(crate) struct EdgeTraces {
    pub h: f64,
    pub n: [f64; 2],
    pub tau: [f64; 2],
    weights: Vec<f64>,
    traces: [VectorTrace; 3],
    p_dofs: Vec<usize>,
    p_vals: Vec<Vec<f64>>,
    /// Vector dofs of every fluid basis function on the fluid triangle.
    v_all: Vec<usize>,
    /// `[n·σ n, τ·σ n]` with σ = 2μ_f D(φ), per point and function of `v_all`.
    traction: Vec<Vec<[f64; 2]>>,
}

/// Barycentric coordinates in triangle `t` of the point at parameter `s`
/// from `edge[0]` to `edge[1]`.
pub(crate) fn bary_on(mesh: &TriangleMesh, t: usize, k: usize, edge: [usize; 2], s: f64) -> [f64; 3] {
    if mesh.triangles()[t].vertices[k] == edge[0] {
        edge_point_bary(k, s)
    } else {
        edge_point_bary(k, 1.0 - s)
    }
}

fn vector_trace(map: &DofMap, mesh: &TriangleMesh, t: usize, k: usize, edge: [usize; 2], rule: &EdgeRule) -> VectorTrace {
    let cell = map.cell(t).expect("edge triangle outside region");
    let local = map.edge_local(k);
    let dofs = local.iter().flat_map(|&a| [2 * cell[a], 2 * cell[a] + 1]).collect();
    let vals = rule
        .points
        .iter()
        .map(|p| {
            let (phi, _) = shape_functions(map.kind(), bary_on(mesh, t, k, edge, p[1]));
            local
                .iter()
                .flat_map(|&a| [[phi[a], 0.0], [0.0, phi[a]]])
                .collect()
        })
        .collect();
    VectorTrace { dofs, vals }
}

impl EdgeTraces {
    pub fn new(
        mesh: &TriangleMesh,
        spaces: &FieldSpaces,
        edge: &EdgeGeometry,
        rule: &EdgeRule,
        mu_f: f64,
    ) -> Self {
        let fluid = edge.primary;
        let porous = edge.secondary.expect("interface edge has two sides");
        let (tf, kf, tp, kp) = (fluid.triangle, fluid.local_edge, porous.triangle, porous.local_edge);
        let n = edge.normal;
        let tau = edge.tangent;
        let ev = edge.vertices;

        let traces = [
            vector_trace(&spaces.velocity, mesh, tf, kf, ev, rule),
            vector_trace(&spaces.displacement, mesh, tp, kp, ev, rule),
            vector_trace(&spaces.flux, mesh, tp, kp, ev, rule),
        ];

        let pcell = spaces.fluid_pressure.cell(tf).unwrap();
        let plocal = spaces.fluid_pressure.edge_local(kf);
        let p_dofs = plocal.iter().map(|&a| pcell[a]).collect();
        let p_vals = rule
            .points
            .iter()
            .map(|p| {
                let (phi, _) = shape_functions(spaces.fluid_pressure.kind(), bary_on(mesh, tf, kf, ev, p[1]));
                plocal.iter().map(|&a| phi[a]).collect()
            })
            .collect();

        let geom = AffineTriangle::of(mesh, tf);
        let v_all = vector_dofs(spaces.velocity.cell(tf).unwrap());
        let traction = rule
            .points
            .iter()
            .map(|p| {
                let (_, rg) = shape_functions(spaces.velocity.kind(), bary_on(mesh, tf, kf, ev, p[1]));
                let mut out = Vec::with_capacity(2 * rg.len());
                for g in rg {
                    let g = geom.grad(g);
                    let gn = g[0] * n[0] + g[1] * n[1];
                    let gt = g[0] * tau[0] + g[1] * tau[1];
                    for d in 0..2 {
                        // D(N e_d) n = ½(e_d (∇N·n) + ∇N n_d)
                        out.push([
                            2.0 * mu_f * n[d] * gn,
                            mu_f * (tau[d] * gn + gt * n[d]),
                        ]);
                    }
                }
                out
            })
            .collect();

        EdgeTraces {
            h: edge.length,
            n,
            tau,
            weights: rule.weights.iter().map(|w| w * edge.length).collect(),
            traces,
            p_dofs,
            p_vals,
            v_all,
            traction,
        }
    }

    fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
        a[0] * b[0] + a[1] * b[1]
    }

    /// ∫ wn (φ_x·n)(φ_y·n) + wt (φ_x·τ)(φ_y·τ).
    pub fn penalty(&self, x: Trace, y: Trace, wn: f64, wt: f64) -> Vec<f64> {
        let (tx, ty) = (&self.traces[x as usize], &self.traces[y as usize]);
        let (nx, ny) = (tx.dofs.len(), ty.dofs.len());
        let mut k = vec![0.0; nx * ny];
        for (q, &w) in self.weights.iter().enumerate() {
            for i in 0..nx {
                let (xn, xt) = (Self::dot(tx.vals[q][i], self.n), Self::dot(tx.vals[q][i], self.tau));
                for j in 0..ny {
                    let (yn, yt) = (Self::dot(ty.vals[q][j], self.n), Self::dot(ty.vals[q][j], self.tau));
                    k[i * ny + j] += w * (wn * xn * yn + wt * xt * yt);
                }
            }
        }
        k
    }

    /// ∫ (φ_x·n)(n·σ(v)n) + c_t (φ_x·τ)(τ·σ(v)n) with columns over the fluid triangle.
    pub fn consistency(&self, x: Trace, c_t: f64) -> Vec<f64> {
        let tx = &self.traces[x as usize];
        let c_t = if x.has_tangential() { c_t } else { 0.0 };
        let (nx, nv) = (tx.dofs.len(), self.v_all.len());
        let mut k = vec![0.0; nx * nv];
        for (q, &w) in self.weights.iter().enumerate() {
            for i in 0..nx {
                let (xn, xt) = (Self::dot(tx.vals[q][i], self.n), Self::dot(tx.vals[q][i], self.tau));
                for j in 0..nv {
                    let [sn, st] = self.traction[q][j];
                    k[i * nv + j] += w * (xn * sn + c_t * xt * st);
                }
            }
        }
        k
    }

    /// ∫ (φ_x·n) p.
    pub fn pressure_consistency(&self, x: Trace) -> Vec<f64> {
        let tx = &self.traces[x as usize];
        let (nx, np) = (tx.dofs.len(), self.p_dofs.len());
        let mut k = vec![0.0; nx * np];
        for (q, &w) in self.weights.iter().enumerate() {
            for i in 0..nx {
                let xn = Self::dot(tx.vals[q][i], self.n);
                for j in 0..np {
                    k[i * np + j] += w * xn * self.p_vals[q][j];
                }
            }
        }
        k
    }

    /// ∫ p ψ.
    pub fn pressure_mass(&self) -> Vec<f64> {
        let np = self.p_dofs.len();
        let mut k = vec![0.0; np * np];
        for (q, &w) in self.weights.iter().enumerate() {
            for i in 0..np {
                for j in 0..np {
                    k[i * np + j] += w * self.p_vals[q][i] * self.p_vals[q][j];
                }
            }
        }
        k
    }

    pub fn dofs(&self, x: Trace) -> &[usize] {
        &self.traces[x as usize].dofs
    }
}

/// Global interface blocks, each a plain integral over Γ.
#[derive(Debug, Clone)]
pub struct InterfaceOperators {
    /// `pen_n[x][y]` = ∫ γ_f μ_f/h (φ_x·n)(φ_y·n).
    pub pen_n: [[CsrMatrix; 3]; 3],
    /// `pen_t[x][y]` = ∫ w_t (φ_x·τ)(φ_y·τ) for velocity and displacement.
    pub pen_t: [[CsrMatrix; 2]; 2],
    /// `cons[x]` = ∫ (φ_x·n)(n·σ(v)n) + c_t (φ_x·τ)(τ·σ(v)n); columns are velocity dofs.
    pub cons: [CsrMatrix; 3],
    /// `cons_p[x]` = ∫ (φ_x·n) p; columns are fluid-pressure dofs.
    pub cons_p: [CsrMatrix; 3],
    /// Σ_e h_e ∫_e p ψ.
    pub mass_p_h: CsrMatrix,
}

fn trace_len(spaces: &FieldSpaces, x: Trace) -> usize {
    match x {
        Trace::Velocity => spaces.velocity.n_dofs(),
        Trace::Displacement => spaces.displacement.n_dofs(),
        Trace::Flux => spaces.flux.n_dofs(),
    }
}

pub fn assemble_interface(
    mesh: &TriangleMesh,
    spaces: &FieldSpaces,
    params: &PhysicalParameters,
    nitsche: &NitscheParameters,
    rule: &EdgeRule,
) -> InterfaceOperators {
    let wts = Weights::new(params, nitsche);
    let edges = if wts.active { mesh.edges_with_tag(EdgeTag::Interface) } else { Vec::new() };
    let locals = parallel::map_slice(&edges, |e| EdgeTraces::new(mesh, spaces, e, rule, params.mu_f));

    let nv = spaces.velocity.n_dofs();
    let np = spaces.fluid_pressure.n_dofs();
    let mut pen_n: Vec<TripletBuilder> = (0..9)
        .map(|k| TripletBuilder::new(trace_len(spaces, Trace::ALL[k / 3]), trace_len(spaces, Trace::ALL[k % 3])))
        .collect();
    let mut pen_t: Vec<TripletBuilder> = (0..4)
        .map(|k| TripletBuilder::new(trace_len(spaces, Trace::ALL[k / 2]), trace_len(spaces, Trace::ALL[k % 2])))
        .collect();
    let mut cons: Vec<TripletBuilder> = Trace::ALL.iter().map(|&x| TripletBuilder::new(trace_len(spaces, x), nv)).collect();
    let mut cons_p: Vec<TripletBuilder> = Trace::ALL.iter().map(|&x| TripletBuilder::new(trace_len(spaces, x), np)).collect();
    let mut mass_p = TripletBuilder::new(np, np);

    for et in &locals {
        let wn = wts.normal_on(et.h);
        let wt = wts.tangential_on(et.h);
        for (k, b) in pen_n.iter_mut().enumerate() {
            let (x, y) = (Trace::ALL[k / 3], Trace::ALL[k % 3]);
            b.add_block(et.dofs(x), et.dofs(y), &et.penalty(x, y, wn, 0.0));
        }
        for (k, b) in pen_t.iter_mut().enumerate() {
            let (x, y) = (Trace::ALL[k / 2], Trace::ALL[k % 2]);
            b.add_block(et.dofs(x), et.dofs(y), &et.penalty(x, y, 0.0, wt));
        }
        for (k, x) in Trace::ALL.into_iter().enumerate() {
            cons[k].add_block(et.dofs(x), &et.v_all, &et.consistency(x, wts.c_t));
            cons_p[k].add_block(et.dofs(x), &et.p_dofs, &et.pressure_consistency(x));
        }
        let mut m = et.pressure_mass();
        m.iter_mut().for_each(|v| *v *= et.h);
        mass_p.add_block(&et.p_dofs, &et.p_dofs, &m);
    }

    let csr = |v: Vec<TripletBuilder>| v.iter().map(TripletBuilder::to_csr).collect::<Vec<_>>();
    let pn = csr(pen_n);
    let pt = csr(pen_t);
    let c = csr(cons);
    let cp = csr(cons_p);
    let arr3 = |v: &[CsrMatrix]| [v[0].clone(), v[1].clone(), v[2].clone()];
    InterfaceOperators {
        pen_n: [arr3(&pn[0..3]), arr3(&pn[3..6]), arr3(&pn[6..9])],
        pen_t: [[pt[0].clone(), pt[1].clone()], [pt[2].clone(), pt[3].clone()]],
        cons: arr3(&c),
        cons_p: arr3(&cp),
        mass_p_h: mass_p.to_csr(),
    }
}

/// Local interface contributions for one (test, unknown) field pairing.
///
/// `rows` index the test field and `cols` the unknown, both in global
/// per-field numbering. Blocks are dense row-major; an absent term is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceTerms {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Traction of the unknown against the test trace.
    pub consistency: Vec<f64>,
    /// Traction of the test function against the unknown's trace; the
    /// velocity-test part carries the factor ς.
    pub adjoint: Vec<f64>,
    /// Normal plus tangential penalty.
    pub penalty: Vec<f64>,
}

fn transpose(k: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; k.len()];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = k[i * cols + j];
        }
    }
    t
}

pub fn interface_terms(
    mesh: &TriangleMesh,
    spaces: &FieldSpaces,
    params: &PhysicalParameters,
    nitsche: &NitscheParameters,
    edge: &EdgeGeometry,
    rule: &EdgeRule,
    unknown: Field,
    test: Field,
) -> Result<InterfaceTerms> {
    if edge.tag != EdgeTag::Interface {
        return Err(Error::Usage(format!("interface terms requested on a {} edge", edge.tag)));
    }
    let on_gamma = |f: Field| Trace::from_field(f).is_some() || f == Field::FluidPressure;
    if !on_gamma(unknown) || !on_gamma(test) {
        return Err(Error::Usage(format!("no interface coupling between {test} and {unknown}")));
    }
    let wts = Weights::new(params, nitsche);
    let et = EdgeTraces::new(mesh, spaces, edge, rule, params.mu_f);
    let dofs_of = |f: Field| match Trace::from_field(f) {
        Some(t) => et.dofs(t).to_vec(),
        None => et.p_dofs.clone(),
    };
    let rows = if test == Field::Velocity { et.v_all.clone() } else { dofs_of(test) };
    let cols = if unknown == Field::Velocity { et.v_all.clone() } else { dofs_of(unknown) };
    let (nr, nc) = (rows.len(), cols.len());
    let zero = vec![0.0; nr * nc];
    if !wts.active {
        return Ok(InterfaceTerms { rows, cols, consistency: zero.clone(), adjoint: zero.clone(), penalty: zero });
    }

    // Re-index a block computed on (row_dofs × col_dofs) onto (rows × cols).
    let place = |k: &[f64], rd: &[usize], cd: &[usize]| {
        let mut out = vec![0.0; nr * nc];
        for (a, r) in rd.iter().enumerate() {
            let i = rows.iter().position(|x| x == r).expect("row dof on edge");
            for (b, c) in cd.iter().enumerate() {
                let j = cols.iter().position(|x| x == c).expect("column dof on edge");
                out[i * nc + j] += k[a * cd.len() + b];
            }
        }
        out
    };

    let (tt, tu) = (Trace::from_field(test), Trace::from_field(unknown));
    let penalty = match (tt, tu) {
        (Some(x), Some(y)) => {
            let wt = if x.has_tangential() && y.has_tangential() { wts.tangential_on(et.h) } else { 0.0 };
            place(&et.penalty(x, y, wts.normal_on(et.h), wt), et.dofs(x), et.dofs(y))
        }
        _ => zero.clone(),
    };
    let consistency = match (tt, unknown) {
        (Some(x), Field::Velocity) => place(&et.consistency(x, wts.c_t), et.dofs(x), &et.v_all),
        (Some(x), Field::FluidPressure) => place(&et.pressure_consistency(x), et.dofs(x), &et.p_dofs),
        _ => zero.clone(),
    };
    let adjoint = match (test, tu) {
        (Field::Velocity, Some(y)) => {
            let k = et.consistency(y, wts.c_t);
            let mut t = place(&transpose(&k, et.dofs(y).len(), et.v_all.len()), &et.v_all, et.dofs(y));
            t.iter_mut().for_each(|v| *v *= nitsche.varsigma);
            t
        }
        (Field::FluidPressure, Some(y)) => {
            let k = et.pressure_consistency(y);
            place(&transpose(&k, et.dofs(y).len(), et.p_dofs.len()), &et.p_dofs, et.dofs(y))
        }
        _ => zero.clone(),
    };
    Ok(InterfaceTerms { rows, cols, consistency, adjoint, penalty })
}
