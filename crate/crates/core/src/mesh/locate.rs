use super::{Region, TriangleMesh};

/// A point expressed in the barycentric frame of its containing triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
}

const INSIDE_TOL: f64 = 1e-10;
const ACCEPT_TOL: f64 = 1e-8;

impl TriangleMesh {
    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.vertex_coords(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Finds a triangle of `region` containing `p`.
    ///
    /// Structured channel meshes use index arithmetic. Otherwise a walk
    /// starting at `hint` is tried, then an exhaustive scan.
    pub fn locate(&self, p: [f64; 2], region: Region, hint: Option<usize>) -> Option<Location> {
        let accept = |t: usize| {
            let bary = self.barycentric(t, p);
            let ok = self.triangles[t].region == region && min3(bary) >= -INSIDE_TOL;
            ok.then_some(Location { triangle: t, bary })
        };
        if let Some(t) = self.grid_candidate(p, region) {
            if let Some(loc) = accept(t) {
                return Some(loc);
            }
        }
        if let Some(start) = hint {
            if let Some(loc) = self.walk(p, region, start) {
                return Some(loc);
            }
        }
        self.scan(p, region)
    }

    fn grid_candidate(&self, p: [f64; 2], region: Region) -> Option<usize> {
        let g = self.grid.as_ref()?;
        let dx = (g.x_range.1 - g.x_range.0) / g.nx as f64;
        let (y0, dy, row0) = match region {
            Region::Porous => (g.y_lo, (g.y_split - g.y_lo) / g.ny_half as f64, 0),
            Region::Fluid => (g.y_split, (g.y_hi - g.y_split) / g.ny_half as f64, g.ny_half),
        };
        let cell = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        let fx = (p[0] - g.x_range.0) / dx;
        let fy = (p[1] - y0) / dy;
        let i = cell(fx, g.nx);
        let jj = cell(fy, g.ny_half);
        let lower = fx - i as f64 >= fy - jj as f64;
        Some(2 * ((row0 + jj) * g.nx + i) + usize::from(!lower))
    }

    fn walk(&self, p: [f64; 2], region: Region, start: usize) -> Option<Location> {
        let mut t = start;
        for _ in 0..self.triangles.len().min(10_000) {
            if self.triangles[t].region != region {
                return None;
            }
            let bary = self.barycentric(t, p);
            let (k, &worst) = bary
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            if worst >= -INSIDE_TOL {
                return Some(Location { triangle: t, bary });
            }
            // The edge opposite vertex k is local edge (k + 1) % 3.
            let ue = self.topology.triangle_edges[t][(k + 1) % 3];
            t = self.topology.edge_triangles[ue]
                .iter()
                .map(|&(n, _)| n)
                .find(|&n| n != t)?;
        }
        None
    }

    fn scan(&self, p: [f64; 2], region: Region) -> Option<Location> {
        let mut best: Option<Location> = None;
        for t in 0..self.triangles.len() {
            if self.triangles[t].region != region {
                continue;
            }
            let bary = self.barycentric(t, p);
            if best.map_or(true, |b| min3(bary) > min3(b.bary)) {
                best = Some(Location { triangle: t, bary });
            }
        }
        best.filter(|b| min3(b.bary) >= -ACCEPT_TOL)
    }
}

fn min3(b: [f64; 3]) -> f64 {
    b[0].min(b[1]).min(b[2])
}
