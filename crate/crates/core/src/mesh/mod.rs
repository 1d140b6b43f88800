//! Two-region triangulations of the channel geometry.
//!
//! The lower half of the channel is the poroelastic region and the upper half
//! the free-fluid region. Nodes on the separating line are shared, so the mesh
//! conforms across the interface.

mod io;
mod locate;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use io::{read_mesh, write_mesh};
pub use locate::Location;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Fluid,
    Porous,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Fluid => "fluid",
            Region::Porous => "porous",
        }
    }
}

impl FromStr for Region {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fluid" => Ok(Region::Fluid),
            "porous" => Ok(Region::Porous),
            other => Err(format!("unknown region `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    Interface,
    FluidIn,
    FluidOut,
    FluidExt,
    PorousIn,
    PorousOut,
    PorousExt,
}

impl EdgeTag {
    pub const ALL: [EdgeTag; 7] = [
        EdgeTag::Interface,
        EdgeTag::FluidIn,
        EdgeTag::FluidOut,
        EdgeTag::FluidExt,
        EdgeTag::PorousIn,
        EdgeTag::PorousOut,
        EdgeTag::PorousExt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Interface => "interface",
            EdgeTag::FluidIn => "fluid_in",
            EdgeTag::FluidOut => "fluid_out",
            EdgeTag::FluidExt => "fluid_ext",
            EdgeTag::PorousIn => "porous_in",
            EdgeTag::PorousOut => "porous_out",
            EdgeTag::PorousExt => "porous_ext",
        }
    }

    /// Region whose boundary carries the tag; `None` for the interface.
    pub fn region(self) -> Option<Region> {
        match self {
            EdgeTag::Interface => None,
            EdgeTag::FluidIn | EdgeTag::FluidOut | EdgeTag::FluidExt => Some(Region::Fluid),
            EdgeTag::PorousIn | EdgeTag::PorousOut | EdgeTag::PorousExt => Some(Region::Porous),
        }
    }
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EdgeTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown edge tag `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedEdge {
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
}

/// Parameters of the structured channel generator, kept for fast point location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGrid {
    pub nx: usize,
    pub ny_half: usize,
    pub x_range: (f64, f64),
    pub y_lo: f64,
    pub y_split: f64,
    pub y_hi: f64,
}

/// A side of a tagged edge as seen from one adjacent triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSide {
    pub triangle: usize,
    /// Local edge number k, joining local vertices k and (k+1) % 3.
    pub local_edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
    /// Owning triangle. For interface edges this is the fluid triangle.
    pub primary: EdgeSide,
    /// Porous triangle across an interface edge; `None` on the outer boundary.
    pub secondary: Option<EdgeSide>,
    /// Unit normal pointing out of the primary triangle.
    pub normal: [f64; 2],
    /// The normal rotated by +90 degrees.
    pub tangent: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<Triangle>,
    edges: Vec<TaggedEdge>,
    h_max: f64,
    grid: Option<ChannelGrid>,
    topology: Topology,
}

#[derive(Debug, Clone, Default)]
struct Topology {
    /// Every distinct edge of the triangulation, vertices sorted ascending.
    unique_edges: Vec<[usize; 2]>,
    /// Per triangle, the unique-edge index of local edges (0,1), (1,2), (2,0).
    triangle_edges: Vec<[usize; 3]>,
    /// Adjacent (triangle, local edge) pairs per unique edge.
    edge_triangles: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for TriangleMesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.triangles == other.triangles && self.edges == other.edges
    }
}

fn key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl TriangleMesh {
    /// Assembles a mesh from raw arrays and checks every structural invariant.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<Triangle>,
        edges: Vec<TaggedEdge>,
    ) -> Result<Self> {
        let mut mesh = TriangleMesh {
            nodes,
            triangles,
            edges,
            h_max: 0.0,
            grid: None,
            topology: Topology::default(),
        };
        mesh.validate_indices()?;
        mesh.topology = Topology::build(&mesh.triangles);
        mesh.validate_orientation()?;
        mesh.validate_edges()?;
        mesh.h_max = mesh.compute_h_max();
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn tagged_edges(&self) -> &[TaggedEdge] {
        &self.edges
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn grid(&self) -> Option<&ChannelGrid> {
        self.grid.as_ref()
    }

    pub fn num_unique_edges(&self) -> usize {
        self.topology.unique_edges.len()
    }

    pub fn unique_edges(&self) -> &[[usize; 2]] {
        &self.topology.unique_edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.topology.triangle_edges[t]
    }

    pub fn vertex_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let v = self.triangles[t].vertices;
        [self.nodes[v[0]], self.nodes[v[1]], self.nodes[v[2]]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertex_coords(t);
        signed_area(a, b, c)
    }

    /// Longest edge of one triangle.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let p = self.vertex_coords(t);
        (0..3)
            .map(|k| dist(p[k], p[(k + 1) % 3]))
            .fold(0.0, f64::max)
    }

    pub fn min_signed_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].region == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Tagged edges carrying `tag`, with adjacency and orientation data.
    pub fn edges_with_tag(&self, tag: EdgeTag) -> Vec<EdgeGeometry> {
        let index: HashMap<[usize; 2], usize> = self
            .topology
            .unique_edges
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i))
            .collect();
        self.edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| {
                // validate_edges guarantees the lookups below succeed.
                let ue = index[&key(e.vertices[0], e.vertices[1])];
                let adj = &self.topology.edge_triangles[ue];
                let side = |&(triangle, local_edge): &(usize, usize)| EdgeSide {
                    triangle,
                    local_edge,
                };
                let (primary, secondary) = if tag == EdgeTag::Interface {
                    let f = adj
                        .iter()
                        .find(|(t, _)| self.triangles[*t].region == Region::Fluid)
                        .map(side)
                        .expect("interface edge without fluid triangle");
                    let p = adj
                        .iter()
                        .find(|(t, _)| self.triangles[*t].region == Region::Porous)
                        .map(side);
                    (f, p)
                } else {
                    (side(&adj[0]), None)
                };
                let tv = self.triangles[primary.triangle].vertices;
                let a = self.nodes[tv[primary.local_edge]];
                let b = self.nodes[tv[(primary.local_edge + 1) % 3]];
                let length = dist(a, b);
                // Counter-clockwise triangles have the outward normal on the right of a->b.
                let normal = [(b[1] - a[1]) / length, -(b[0] - a[0]) / length];
                let tangent = [-normal[1], normal[0]];
                EdgeGeometry {
                    vertices: e.vertices,
                    tag,
                    primary,
                    secondary,
                    normal,
                    tangent,
                    length,
                }
            })
            .collect()
    }

    fn validate_indices(&self) -> Result<()> {
        let n = self.nodes.len();
        if let Some(i) = self.nodes.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Geometry(format!("node {i} has non-finite coordinates")));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let v = tri.vertices;
            if v.iter().any(|&i| i >= n) {
                return Err(Error::Geometry(format!("triangle {t} references a node out of range")));
            }
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(Error::Geometry(format!("triangle {t} repeats a vertex")));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.vertices.iter().any(|&v| v >= n) {
                return Err(Error::Geometry(format!("edge {i} references a node out of range")));
            }
        }
        Ok(())
    }

    fn validate_orientation(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            if !(a > 0.0) {
                return Err(Error::Geometry(format!(
                    "triangle {t} is inverted or degenerate (signed area {a:e})"
                )));
            }
        }
        Ok(())
    }

    fn validate_edges(&self) -> Result<()> {
        let topo = &self.topology;
        let index: HashMap<[usize; 2], usize> = topo
            .unique_edges
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i))
            .collect();
        let mut tagged = vec![false; topo.unique_edges.len()];
        for (i, e) in self.edges.iter().enumerate() {
            let Some(&ue) = index.get(&key(e.vertices[0], e.vertices[1])) else {
                return Err(Error::Geometry(format!(
                    "tagged edge {i} ({}, {}) is not an edge of any triangle",
                    e.vertices[0], e.vertices[1]
                )));
            };
            if std::mem::replace(&mut tagged[ue], true) {
                return Err(Error::Geometry(format!("edge {i} is tagged more than once")));
            }
            let adj = &topo.edge_triangles[ue];
            let regions: Vec<Region> = adj.iter().map(|(t, _)| self.triangles[*t].region).collect();
            match e.tag.region() {
                None => {
                    let ok = regions.len() == 2
                        && regions.contains(&Region::Fluid)
                        && regions.contains(&Region::Porous);
                    if !ok {
                        return Err(Error::Geometry(format!(
                            "interface edge {i} is not shared by one fluid and one porous triangle"
                        )));
                    }
                }
                Some(r) => {
                    if regions.len() != 1 || regions[0] != r {
                        return Err(Error::Geometry(format!(
                            "edge {i} tagged {} is not a boundary edge of the {} region",
                            e.tag,
                            r.as_str()
                        )));
                    }
                }
            }
        }
        for (ue, adj) in topo.edge_triangles.iter().enumerate() {
            let mixed = adj.len() == 2
                && self.triangles[adj[0].0].region != self.triangles[adj[1].0].region;
            if (adj.len() == 1 || mixed) && !tagged[ue] {
                let [a, b] = topo.unique_edges[ue];
                return Err(Error::Geometry(format!("boundary edge ({a}, {b}) has no tag")));
            }
            if adj.len() > 2 {
                let [a, b] = topo.unique_edges[ue];
                return Err(Error::Geometry(format!("edge ({a}, {b}) is shared by more than two triangles")));
            }
        }
        Ok(())
    }

    fn compute_h_max(&self) -> f64 {
        self.topology
            .unique_edges
            .iter()
            .map(|&[a, b]| dist(self.nodes[a], self.nodes[b]))
            .fold(0.0, f64::max)
    }
}

impl Topology {
    fn build(triangles: &[Triangle]) -> Self {
        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut unique_edges = Vec::new();
        let mut edge_triangles: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let kk = key(tri.vertices[k], tri.vertices[(k + 1) % 3]);
                let id = *index.entry(kk).or_insert_with(|| {
                    unique_edges.push(kk);
                    edge_triangles.push(Vec::new());
                    unique_edges.len() - 1
                });
                edge_triangles[id].push((t, k));
                *slot = id;
            }
            triangle_edges.push(local);
        }
        Topology {
            unique_edges,
            triangle_edges,
            edge_triangles,
        }
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Structured triangulation of `x_range × [y_lo, y_hi]`, porous below `y_split`
/// and fluid above. Each cell is cut along its lower-left to upper-right diagonal.
pub fn build_channel_mesh(
    nx: usize,
    ny_half: usize,
    x_range: (f64, f64),
    y_split: f64,
    y_lo: f64,
    y_hi: f64,
) -> Result<TriangleMesh> {
    if nx == 0 || ny_half == 0 {
        return Err(Error::Parameter("cell counts must be at least 1".into()));
    }
    if !(x_range.0 < x_range.1) {
        return Err(Error::Parameter(format!(
            "empty x range [{}, {}]",
            x_range.0, x_range.1
        )));
    }
    if !(y_lo < y_split && y_split < y_hi) {
        return Err(Error::Parameter(format!(
            "need y_lo < y_split < y_hi, got {y_lo}, {y_split}, {y_hi}"
        )));
    }
    let ny = 2 * ny_half;
    let dx = (x_range.1 - x_range.0) / nx as f64;
    let y_at = |j: usize| {
        if j <= ny_half {
            y_lo + (y_split - y_lo) * j as f64 / ny_half as f64
        } else {
            y_split + (y_hi - y_split) * (j - ny_half) as f64 / ny_half as f64
        }
    };
    let node = |i: usize, j: usize| j * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { x_range.1 } else { x_range.0 + dx * i as f64 };
            nodes.push([x, y_at(j)]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let region = if j < ny_half { Region::Porous } else { Region::Fluid };
        for i in 0..nx {
            let (n00, n10, n11, n01) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            triangles.push(Triangle { vertices: [n00, n10, n11], region });
            triangles.push(Triangle { vertices: [n00, n11, n01], region });
        }
    }

    let mut edges = Vec::new();
    for j in 0..ny {
        let (tag_in, tag_out) = if j < ny_half {
            (EdgeTag::PorousIn, EdgeTag::PorousOut)
        } else {
            (EdgeTag::FluidIn, EdgeTag::FluidOut)
        };
        edges.push(TaggedEdge { vertices: [node(0, j), node(0, j + 1)], tag: tag_in });
        edges.push(TaggedEdge { vertices: [node(nx, j), node(nx, j + 1)], tag: tag_out });
    }
    for i in 0..nx {
        edges.push(TaggedEdge { vertices: [node(i, 0), node(i + 1, 0)], tag: EdgeTag::PorousExt });
        edges.push(TaggedEdge { vertices: [node(i, ny), node(i + 1, ny)], tag: EdgeTag::FluidExt });
        edges.push(TaggedEdge {
            vertices: [node(i, ny_half), node(i + 1, ny_half)],
            tag: EdgeTag::Interface,
        });
    }

    let mut mesh = TriangleMesh::new(nodes, triangles, edges)?;
    // The cell diagonal is the longest edge; take it from the spacing rather than
    // from rounded node differences so that refinement halves it exactly.
    let dy = ((y_split - y_lo) / ny_half as f64).max((y_hi - y_split) / ny_half as f64);
    mesh.h_max = dx.hypot(dy);
    mesh.grid = Some(ChannelGrid {
        nx,
        ny_half,
        x_range,
        y_lo,
        y_split,
        y_hi,
    });
    Ok(mesh)
}

/// Moves every node through `map`, keeping connectivity and tags.
pub fn apply_mapping<F>(mesh: &TriangleMesh, map: F) -> Result<TriangleMesh>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let nodes: Vec<[f64; 2]> = mesh.nodes.iter().map(|&p| map(p)).collect();
    if let Some(i) = nodes.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Geometry(format!("mapping is undefined at node {i}")));
    }
    let mut mapped = TriangleMesh {
        nodes,
        triangles: mesh.triangles.clone(),
        edges: mesh.edges.clone(),
        h_max: 0.0,
        grid: None,
        topology: mesh.topology.clone(),
    };
    mapped.validate_orientation()?;
    mapped.h_max = mapped.compute_h_max();
    Ok(mapped)
}

/// The wavy-layer map used for the injection scenario.
pub fn test2_mapping([x, y]: [f64; 2]) -> [f64; 2] {
    let c = ((std::f64::consts::PI * x + y) / 100.0).cos();
    [x, 5.0 * ((x + y) / 100.0).cos() * c * c + y / 5.0 - x / 10.0]
}
