use crate::mesh::{Region, TriangleMesh};

use super::shape::ElementKind;

/// Continuous Lagrange degrees of freedom on the triangles of one region.
///
/// Vertex dofs come first (in mesh-vertex order), then edge midpoints (in
/// mesh-edge order). Vector kinds interleave components: `2 * scalar + c`.
#[derive(Debug, Clone)]
pub struct DofMap {
    kind: ElementKind,
    region: Option<Region>,
    cell_dofs: Vec<Option<[usize; 6]>>,
    n_scalar: usize,
    vertex_dof: Vec<Option<usize>>,
    points: Vec<[f64; 2]>,
}

/// Scalar dof map over the triangles of `region` (`None` for the whole mesh).
pub fn build_dof_map(mesh: &TriangleMesh, kind: ElementKind, region: Option<Region>) -> DofMap {
    let in_region = |t: usize| region.map_or(true, |r| mesh.triangles()[t].region == r);
    let n_tri = mesh.triangles().len();

    let mut vertex_dof = vec![None; mesh.nodes().len()];
    let mut edge_dof = vec![None; mesh.num_unique_edges()];
    for t in (0..n_tri).filter(|&t| in_region(t)) {
        for v in mesh.triangles()[t].vertices {
            vertex_dof[v] = Some(0);
        }
        if kind.degree() == 2 {
            for e in mesh.triangle_edges(t) {
                edge_dof[e] = Some(0);
            }
        }
    }

    let mut points = Vec::new();
    for (v, slot) in vertex_dof.iter_mut().enumerate() {
        if slot.is_some() {
            *slot = Some(points.len());
            points.push(mesh.nodes()[v]);
        }
    }
    for (e, slot) in edge_dof.iter_mut().enumerate() {
        if slot.is_some() {
            *slot = Some(points.len());
            let [a, b] = mesh.unique_edges()[e];
            let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
            points.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let cell_dofs = (0..n_tri)
        .map(|t| {
            in_region(t).then(|| {
                let mut d = [usize::MAX; 6];
                for (k, v) in mesh.triangles()[t].vertices.into_iter().enumerate() {
                    d[k] = vertex_dof[v].unwrap();
                }
                if kind.degree() == 2 {
                    for (k, e) in mesh.triangle_edges(t).into_iter().enumerate() {
                        d[3 + k] = edge_dof[e].unwrap();
                    }
                }
                d
            })
        })
        .collect();

    DofMap {
        kind,
        region,
        cell_dofs,
        n_scalar: points.len(),
        vertex_dof,
        points,
    }
}

impl DofMap {
    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn region(&self) -> Option<Region> {
        self.region
    }

    pub fn components(&self) -> usize {
        self.kind.components()
    }

    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    /// Total dofs including vector components.
    pub fn n_dofs(&self) -> usize {
        self.n_scalar * self.components()
    }

    pub fn n_local(&self) -> usize {
        self.kind.scalar_local()
    }

    /// Scalar dofs of triangle `t`, or `None` if it lies outside the region.
    pub fn cell(&self, t: usize) -> Option<&[usize]> {
        self.cell_dofs[t].as_ref().map(|d| &d[..self.n_local()])
    }

    pub fn vertex_dof(&self, vertex: usize) -> Option<usize> {
        self.vertex_dof[vertex]
    }

    /// Coordinates of each scalar dof.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Local scalar indices of the basis functions living on local edge `k`.
    pub fn edge_local(&self, k: usize) -> Vec<usize> {
        let mut l = vec![k, (k + 1) % 3];
        if self.kind.degree() == 2 {
            l.push(3 + k);
        }
        l
    }

    /// Evaluates a vector-valued coefficient field at barycentric point `bary` of triangle `t`.
    pub fn eval_vector(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> [f64; 2] {
        let (phi, _) = super::shape::shape_functions(self.kind, bary);
        let cell = self.cell(t).expect("triangle outside dof map region");
        let mut v = [0.0; 2];
        for (i, &d) in cell.iter().enumerate() {
            v[0] += phi[i] * coeffs[2 * d];
            v[1] += phi[i] * coeffs[2 * d + 1];
        }
        v
    }

    pub fn eval_scalar(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> f64 {
        let (phi, _) = super::shape::shape_functions(self.kind, bary);
        let cell = self.cell(t).expect("triangle outside dof map region");
        cell.iter().enumerate().map(|(i, &d)| phi[i] * coeffs[d]).sum()
    }

    /// Coefficients interpolating `f` at the dof points.
    pub fn interpolate_scalar(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.points.iter().map(|&p| f(p)).collect()
    }

    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        self.points.iter().flat_map(|&p| f(p)).collect()
    }
}
