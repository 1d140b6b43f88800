//! Element integrals over the fluid and porous regions.

use crate::fem::{AffineTriangle, BasisTable, CsrMatrix, DofMap, TriangleRule, TripletBuilder};
use crate::mesh::{Region, TriangleMesh};
use crate::model::{PhysicalParameters, SourceKind};
use crate::parallel;

use super::FieldSpaces;

/// Constant-coefficient region operators. Rows are test functions.
#[derive(Debug, Clone)]
pub struct VolumeOperators {
    /// 2μ_f (D(v), D(φ)) on V_f × V_f.
    pub a_f: CsrMatrix,
    /// (∇·v, ψ) on Q_f × V_f.
    pub div_f: CsrMatrix,
    /// Σ_T h_T² (∇p, ∇ψ)_T on Q_f × Q_f.
    pub kh_f: CsrMatrix,
    /// 2μ_p (D(U), D(φ)) on X_p × X_p.
    pub a_p: CsrMatrix,
    /// (∇·U, w) on M_p × X_p.
    pub div_u: CsrMatrix,
    /// P1 mass on the porous pressure space, shared by ξ and η.
    pub m_s: CsrMatrix,
    /// Σ_T h_T² (∇ξ, ∇w)_T on the porous pressure space.
    pub kh_s: CsrMatrix,
    /// (k⁻¹ q, r) on V_p × V_p.
    pub m_q: CsrMatrix,
    /// (∇·q, z) on Q_p × V_p.
    pub div_q: CsrMatrix,
}

/// Physical gradients of every basis function at every quadrature point.
pub(crate) struct ElementTable {
    pub geom: AffineTriangle,
    /// Physical weights: reference weight times |det J|.
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl ElementTable {
    pub fn new(mesh: &TriangleMesh, t: usize, rule: &TriangleRule, basis: &BasisTable) -> Self {
        let geom = AffineTriangle::of(mesh, t);
        let jac = 2.0 * geom.area;
        ElementTable {
            geom,
            weights: rule.weights.iter().map(|w| w * jac).collect(),
            values: basis.values.clone(),
            grads: basis
                .ref_grads
                .iter()
                .map(|row| row.iter().map(|&g| geom.grad(g)).collect())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }
}

pub(crate) fn vector_dofs(cell: &[usize]) -> Vec<usize> {
    cell.iter().flat_map(|&d| [2 * d, 2 * d + 1]).collect()
}

/// 2μ (D(φ_j), D(φ_i)) with vector index 2a + c.
pub(crate) fn strain_block(mu: f64, e: &ElementTable) -> Vec<f64> {
    let n = e.n();
    let m = 2 * n;
    let mut k = vec![0.0; m * m];
    for (q, &w) in e.weights.iter().enumerate() {
        let g = &e.grads[q];
        for a in 0..n {
            for b in 0..n {
                let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                for c in 0..2 {
                    for d in 0..2 {
                        // 2 D(N_a e_c) : D(N_b e_d) = δ_cd ∇N_a·∇N_b + ∂_d N_a ∂_c N_b
                        let mut v = g[a][d] * g[b][c];
                        if c == d {
                            v += dot;
                        }
                        k[(2 * a + c) * m + 2 * b + d] += w * mu * v;
                    }
                }
            }
        }
    }
    k
}

/// (∇·φ_j, ψ_i) with scalar rows from `s` and vector columns from `v`.
pub(crate) fn divergence_block(s: &ElementTable, v: &ElementTable) -> Vec<f64> {
    let (ns, nv) = (s.n(), v.n());
    let mut k = vec![0.0; ns * 2 * nv];
    for (q, &w) in s.weights.iter().enumerate() {
        for a in 0..ns {
            let psi = s.values[q][a];
            for b in 0..nv {
                for d in 0..2 {
                    k[a * 2 * nv + 2 * b + d] += w * psi * v.grads[q][b][d];
                }
            }
        }
    }
    k
}

pub(crate) fn mass_block(e: &ElementTable) -> Vec<f64> {
    let n = e.n();
    let mut k = vec![0.0; n * n];
    for (q, &w) in e.weights.iter().enumerate() {
        for a in 0..n {
            for b in 0..n {
                k[a * n + b] += w * e.values[q][a] * e.values[q][b];
            }
        }
    }
    k
}

pub(crate) fn stiffness_block(e: &ElementTable) -> Vec<f64> {
    let n = e.n();
    let mut k = vec![0.0; n * n];
    for (q, &w) in e.weights.iter().enumerate() {
        let g = &e.grads[q];
        for a in 0..n {
            for b in 0..n {
                k[a * n + b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    k
}

/// (T φ_j, φ_i) for a constant 2×2 tensor `tensor`.
pub(crate) fn tensor_mass_block(e: &ElementTable, tensor: [[f64; 2]; 2]) -> Vec<f64> {
    let n = e.n();
    let m = 2 * n;
    let mut k = vec![0.0; m * m];
    for (q, &w) in e.weights.iter().enumerate() {
        for a in 0..n {
            for b in 0..n {
                let nn = w * e.values[q][a] * e.values[q][b];
                for c in 0..2 {
                    for d in 0..2 {
                        k[(2 * a + c) * m + 2 * b + d] += nn * tensor[c][d];
                    }
                }
            }
        }
    }
    k
}

/// Local contributions of one triangle to a set of operators.
struct Local {
    blocks: Vec<(Vec<usize>, Vec<usize>, Vec<f64>)>,
}

fn region_triangles(mesh: &TriangleMesh, region: Region) -> Vec<usize> {
    (0..mesh.triangles().len())
        .filter(|&t| mesh.triangles()[t].region == region)
        .collect()
}

fn merge(locals: &[Local], shapes: &[(usize, usize)]) -> Vec<CsrMatrix> {
    let mut builders: Vec<TripletBuilder> = shapes.iter().map(|&(r, c)| TripletBuilder::new(r, c)).collect();
    for l in locals {
        for (b, (rows, cols, vals)) in builders.iter_mut().zip(&l.blocks) {
            b.add_block(rows, cols, vals);
        }
    }
    builders.iter().map(TripletBuilder::to_csr).collect()
}

fn basis_for<'a>(map: &DofMap, p1: &'a BasisTable, p2: &'a BasisTable) -> &'a BasisTable {
    if map.kind().degree() == 1 {
        p1
    } else {
        p2
    }
}

pub fn assemble_volume(
    mesh: &TriangleMesh,
    spaces: &FieldSpaces,
    params: &PhysicalParameters,
    resistivity: [[f64; 2]; 2],
    rule: &TriangleRule,
) -> VolumeOperators {
    let p1 = BasisTable::new(crate::fem::ElementKind::P1Scalar, &rule.points);
    let p2 = BasisTable::new(crate::fem::ElementKind::P2Scalar, &rule.points);

    let fluid = region_triangles(mesh, Region::Fluid);
    let (vb, pb) = (basis_for(&spaces.velocity, &p1, &p2), &p1);
    let fluid_locals = parallel::map_slice(&fluid, |&t| {
        let ev = ElementTable::new(mesh, t, rule, vb);
        let ep = ElementTable::new(mesh, t, rule, pb);
        let h2 = ev.geom.diameter.powi(2);
        let vd = vector_dofs(spaces.velocity.cell(t).unwrap());
        let pd = spaces.fluid_pressure.cell(t).unwrap().to_vec();
        let mut kh = stiffness_block(&ep);
        kh.iter_mut().for_each(|x| *x *= h2);
        Local {
            blocks: vec![
                (vd.clone(), vd.clone(), strain_block(params.mu_f, &ev)),
                (pd.clone(), vd, divergence_block(&ep, &ev)),
                (pd.clone(), pd, kh),
            ],
        }
    });
    let (nv, np) = (spaces.velocity.n_dofs(), spaces.fluid_pressure.n_dofs());
    let mut f = merge(&fluid_locals, &[(nv, nv), (np, nv), (np, np)]).into_iter();

    let porous = region_triangles(mesh, Region::Porous);
    let ub = basis_for(&spaces.displacement, &p1, &p2);
    let qb = basis_for(&spaces.flux, &p1, &p2);
    let porous_locals = parallel::map_slice(&porous, |&t| {
        let eu = ElementTable::new(mesh, t, rule, ub);
        let eq = ElementTable::new(mesh, t, rule, qb);
        let es = ElementTable::new(mesh, t, rule, &p1);
        let h2 = es.geom.diameter.powi(2);
        let ud = vector_dofs(spaces.displacement.cell(t).unwrap());
        let qd = vector_dofs(spaces.flux.cell(t).unwrap());
        let sd = spaces.pseudo.cell(t).unwrap().to_vec();
        let mut kh = stiffness_block(&es);
        kh.iter_mut().for_each(|x| *x *= h2);
        Local {
            blocks: vec![
                (ud.clone(), ud.clone(), strain_block(params.mu_p, &eu)),
                (sd.clone(), ud, divergence_block(&es, &eu)),
                (sd.clone(), sd.clone(), mass_block(&es)),
                (sd.clone(), sd.clone(), kh),
                (qd.clone(), qd.clone(), tensor_mass_block(&eq, resistivity)),
                (sd, qd, divergence_block(&es, &eq)),
            ],
        }
    });
    let (nu, ns, nq) = (
        spaces.displacement.n_dofs(),
        spaces.pseudo.n_dofs(),
        spaces.flux.n_dofs(),
    );
    let mut p = merge(
        &porous_locals,
        &[(nu, nu), (ns, nu), (ns, ns), (ns, ns), (nq, nq), (ns, nq)],
    )
    .into_iter();

    VolumeOperators {
        a_f: f.next().unwrap(),
        div_f: f.next().unwrap(),
        kh_f: f.next().unwrap(),
        a_p: p.next().unwrap(),
        div_u: p.next().unwrap(),
        m_s: p.next().unwrap(),
        kh_s: p.next().unwrap(),
        m_q: p.next().unwrap(),
        div_q: p.next().unwrap(),
    }
}

/// Load vectors at time `t`: (f, φ_f), (g, ψ_f), (h, φ_p), (s, z).
#[derive(Debug, Clone)]
pub struct LoadVectors {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn assemble_loads(
    mesh: &TriangleMesh,
    spaces: &FieldSpaces,
    params: &PhysicalParameters,
    sources: &SourceKind,
    rule: &TriangleRule,
    t: f64,
) -> LoadVectors {
    let mut out = LoadVectors {
        f: vec![0.0; spaces.velocity.n_dofs()],
        g: vec![0.0; spaces.fluid_pressure.n_dofs()],
        h: vec![0.0; spaces.displacement.n_dofs()],
        s: vec![0.0; spaces.pseudo.n_dofs()],
    };
    if matches!(sources, SourceKind::Zero) {
        return out;
    }
    let p1 = BasisTable::new(crate::fem::ElementKind::P1Scalar, &rule.points);
    let p2 = BasisTable::new(crate::fem::ElementKind::P2Scalar, &rule.points);

    let fluid = region_triangles(mesh, Region::Fluid);
    let vb = basis_for(&spaces.velocity, &p1, &p2);
    let locals = parallel::map_slice(&fluid, |&tri| {
        let ev = ElementTable::new(mesh, tri, rule, vb);
        let mut fv = vec![0.0; 2 * ev.n()];
        let mut gv = [0.0; 3];
        for (q, &w) in ev.weights.iter().enumerate() {
            let x = ev.geom.point(rule.points[q]);
            let src = sources.eval(x, t, params);
            for a in 0..ev.n() {
                fv[2 * a] += w * src.f[0] * ev.values[q][a];
                fv[2 * a + 1] += w * src.f[1] * ev.values[q][a];
            }
            for (a, ga) in gv.iter_mut().enumerate() {
                *ga += w * src.g * p1.values[q][a];
            }
        }
        (tri, fv, gv)
    });
    for (tri, fv, gv) in locals {
        for (k, d) in vector_dofs(spaces.velocity.cell(tri).unwrap()).into_iter().enumerate() {
            out.f[d] += fv[k];
        }
        for (k, &d) in spaces.fluid_pressure.cell(tri).unwrap().iter().enumerate() {
            out.g[d] += gv[k];
        }
    }

    let porous = region_triangles(mesh, Region::Porous);
    let ub = basis_for(&spaces.displacement, &p1, &p2);
    let locals = parallel::map_slice(&porous, |&tri| {
        let eu = ElementTable::new(mesh, tri, rule, ub);
        let mut hv = vec![0.0; 2 * eu.n()];
        let mut sv = [0.0; 3];
        for (q, &w) in eu.weights.iter().enumerate() {
            let x = eu.geom.point(rule.points[q]);
            let src = sources.eval(x, t, params);
            for a in 0..eu.n() {
                hv[2 * a] += w * src.h[0] * eu.values[q][a];
                hv[2 * a + 1] += w * src.h[1] * eu.values[q][a];
            }
            for (a, sa) in sv.iter_mut().enumerate() {
                *sa += w * src.s * p1.values[q][a];
            }
        }
        (tri, hv, sv)
    });
    for (tri, hv, sv) in locals {
        for (k, d) in vector_dofs(spaces.displacement.cell(tri).unwrap()).into_iter().enumerate() {
            out.h[d] += hv[k];
        }
        for (k, &d) in spaces.pseudo.cell(tri).unwrap().iter().enumerate() {
            out.s[d] += sv[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{triangle_quadrature, ElementKind};
    use crate::mesh::build_channel_mesh;

    fn one_triangle_table(kind: ElementKind, verts: [[f64; 2]; 3]) -> ElementTable {
        let rule = triangle_quadrature(4).unwrap();
        let basis = BasisTable::new(kind, &rule.points);
        let geom = AffineTriangle::new(verts);
        let jac = 2.0 * geom.area;
        ElementTable {
            geom,
            weights: rule.weights.iter().map(|w| w * jac).collect(),
            values: basis.values.clone(),
            grads: basis
                .ref_grads
                .iter()
                .map(|row| row.iter().map(|&g| geom.grad(g)).collect())
                .collect(),
        }
    }

    #[test]
    fn p1_mass_matches_closed_form() {
        let verts = [[0.3, -0.1], [1.4, 0.2], [0.5, 0.9]];
        let e = one_triangle_table(ElementKind::P1Scalar, verts);
        let m = mass_block(&e);
        let area = e.geom.area;
        for i in 0..3 {
            for j in 0..3 {
                let want = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((m[i * 3 + j] - want).abs() <= 1e-14, "{i},{j}");
            }
        }
    }

    /// Hand integration of 2μ D(φ_i):D(φ_j) for P1 on the unit right triangle,
    /// where every gradient is constant: ∇λ0 = (−1,−1), ∇λ1 = (1,0), ∇λ2 = (0,1).
    #[test]
    fn p1_strain_matches_hand_integration() {
        let e = one_triangle_table(ElementKind::P1Scalar, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let mu = 1.0;
        let k = strain_block(mu, &e);
        let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let strain = |a: usize, c: usize| {
            let mut d = [[0.0; 2]; 2];
            d[c][0] += 0.5 * g[a][0];
            d[c][1] += 0.5 * g[a][1];
            d[0][c] += 0.5 * g[a][0];
            d[1][c] += 0.5 * g[a][1];
            d
        };
        for i in 0..6 {
            for j in 0..6 {
                let (di, dj) = (strain(i / 2, i % 2), strain(j / 2, j % 2));
                let dd: f64 = (0..2).flat_map(|r| (0..2).map(move |s| (r, s))).map(|(r, s)| di[r][s] * dj[r][s]).sum();
                let want = 2.0 * mu * dd * 0.5;
                assert!((k[i * 6 + j] - want).abs() < 1e-14, "{i},{j}: {} vs {want}", k[i * 6 + j]);
            }
        }
    }

    #[test]
    fn rigid_motions_have_zero_strain_energy() {
        let e = one_triangle_table(ElementKind::P2Scalar, [[0.1, 0.0], [1.0, 0.3], [0.2, 0.8]]);
        let k = strain_block(3.0, &e);
        // translation, and the infinitesimal rotation (−y, x) at the six nodes
        let nodes = [[0.1, 0.0], [1.0, 0.3], [0.2, 0.8], [0.55, 0.15], [0.6, 0.55], [0.15, 0.4]];
        let modes: [Vec<f64>; 3] = [
            nodes.iter().flat_map(|_| [1.0, 0.0]).collect(),
            nodes.iter().flat_map(|_| [0.0, 1.0]).collect(),
            nodes.iter().flat_map(|p| [-p[1], p[0]]).collect(),
        ];
        for m in &modes {
            for i in 0..12 {
                let r: f64 = (0..12).map(|j| k[i * 12 + j] * m[j]).sum();
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn divergence_of_linear_field() {
        // U = (x, 0) has ∇·U = 1, so Σ_j D_ij U_j = ∫ ψ_i = area/3.
        let verts = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        let ep = one_triangle_table(ElementKind::P1Scalar, verts);
        let ev = one_triangle_table(ElementKind::P2Scalar, verts);
        let d = divergence_block(&ep, &ev);
        let nodes = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.5], [0.0, 0.5]];
        let u: Vec<f64> = nodes.iter().flat_map(|p| [p[0], 0.0]).collect();
        for i in 0..3 {
            let r: f64 = (0..12).map(|j| d[i * 12 + j] * u[j]).sum();
            assert!((r - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn global_mass_sums_to_area() {
        let mesh = build_channel_mesh(3, 2, (0.0, 1.0), 0.0, -1.0, 1.0).unwrap();
        let spaces = FieldSpaces::new(&mesh, super::super::ElementPairing::TaylorHood);
        let rule = triangle_quadrature(4).unwrap();
        let ops = assemble_volume(&mesh, &spaces, &PhysicalParameters::table2(), [[0.5, 0.0], [0.0, 0.5]], &rule);
        let ones = vec![1.0; spaces.pseudo.n_dofs()];
        assert!((ops.m_s.quadratic_form(&ones) - 1.0).abs() < 1e-13);
        // k = diag(2,2) gives half the vector mass.
        let qx: Vec<f64> = (0..spaces.flux.n_scalar()).flat_map(|_| [1.0, 0.0]).collect();
        assert!((ops.m_q.quadratic_form(&qx) - 0.5).abs() < 1e-13);
    }
}
