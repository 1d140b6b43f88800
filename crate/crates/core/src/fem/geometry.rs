use crate::mesh::TriangleMesh;

/// Affine map from the reference triangle onto a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineTriangle {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Inverse transpose of the Jacobian; maps reference gradients to physical ones.
    pub inv_jt: [[f64; 2]; 2],
    pub diameter: f64,
}

impl AffineTriangle {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = vertices;
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_jt = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
        let len = |p: [f64; 2], q: [f64; 2]| (q[0] - p[0]).hypot(q[1] - p[1]);
        AffineTriangle {
            vertices,
            area: 0.5 * det,
            inv_jt,
            diameter: len(a, b).max(len(b, c)).max(len(c, a)),
        }
    }

    pub fn of(mesh: &TriangleMesh, t: usize) -> Self {
        Self::new(mesh.vertex_coords(t))
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }

    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inv_jt;
        [m[0][0] * g[0] + m[0][1] * g[1], m[1][0] * g[0] + m[1][1] * g[1]]
    }
}

/// Barycentric coordinates of the point at parameter `s` along local edge `k`
/// (from vertex k towards vertex (k+1) % 3).
pub fn edge_point_bary(k: usize, s: f64) -> [f64; 3] {
    let mut b = [0.0; 3];
    b[k] = 1.0 - s;
    b[(k + 1) % 3] = s;
    b
}
