//! Line-oriented ASCII mesh format.
//!
//! ```text
//! MESH v1
//! nodes <N>
//! <x> <y>
//! triangles <T>
//! <i> <j> <k> <fluid|porous>
//! edges <E>
//! <i> <j> <tag>
//! ```
//!
//! Lines starting with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{TaggedEdge, Triangle, TriangleMesh};
use crate::error::{Error, Result};
use crate::format::g17;

pub fn write_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse(&text, path)
}

pub(crate) fn to_string(mesh: &TriangleMesh) -> String {
    let mut s = String::from("MESH v1\n");
    let _ = writeln!(s, "nodes {}", mesh.nodes().len());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {}", g17(p[0]), g17(p[1]));
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles().len());
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        let _ = writeln!(s, "{a} {b} {c} {}", t.region.as_str());
    }
    let _ = writeln!(s, "edges {}", mesh.tagged_edges().len());
    for e in mesh.tagged_edges() {
        let [a, b] = e.vertices;
        let _ = writeln!(s, "{a} {b} {}", e.tag);
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next meaningful line as (1-based line number, tokens).
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok((i + 1, t.split_whitespace().collect()));
        }
        Err(Error::parse(self.path, self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line, msg)
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let (line, tok) = self.next(&format!("`{name} <count>`"))?;
        match tok.as_slice() {
            [n, count] if *n == name => count
                .parse()
                .map_err(|_| self.err(line, format!("invalid {name} count `{count}`"))),
            _ => Err(self.err(line, format!("expected `{name} <count>`"))),
        }
    }
}

fn parse_index(lines: &Lines, line: usize, tok: &str, n_nodes: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| lines.err(line, format!("invalid node index `{tok}`")))?;
    if i >= n_nodes {
        return Err(lines.err(line, format!("node index {i} out of range 0..{}", n_nodes)));
    }
    Ok(i)
}

pub(crate) fn parse(text: &str, path: &Path) -> Result<TriangleMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        last: 0,
    };
    let (line, tok) = lines.next("`MESH v1` header")?;
    if tok != ["MESH", "v1"] {
        return Err(lines.err(line, "missing `MESH v1` header"));
    }

    let n_nodes = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, tok) = lines.next("node coordinates")?;
        let [x, y] = tok.as_slice() else {
            return Err(lines.err(line, "expected `<x> <y>`"));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| lines.err(line, format!("invalid coordinate `{s}`")))
        };
        nodes.push([parse(x)?, parse(y)?]);
    }

    let n_tri = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(n_tri);
    for _ in 0..n_tri {
        let (line, tok) = lines.next("triangle")?;
        let [a, b, c, r] = tok.as_slice() else {
            return Err(lines.err(line, "expected `<i> <j> <k> <region>`"));
        };
        let vertices = [
            parse_index(&lines, line, a, n_nodes)?,
            parse_index(&lines, line, b, n_nodes)?,
            parse_index(&lines, line, c, n_nodes)?,
        ];
        let region = r.parse().map_err(|e: String| lines.err(line, e))?;
        triangles.push(Triangle { vertices, region });
    }

    let n_edges = lines.header("edges")?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (line, tok) = lines.next("edge")?;
        let [a, b, t] = tok.as_slice() else {
            return Err(lines.err(line, "expected `<i> <j> <tag>`"));
        };
        let vertices = [
            parse_index(&lines, line, a, n_nodes)?,
            parse_index(&lines, line, b, n_nodes)?,
        ];
        let tag = t.parse().map_err(|e: String| lines.err(line, e))?;
        edges.push(TaggedEdge { vertices, tag });
    }

    if let Ok((line, _)) = lines.next("") {
        return Err(lines.err(line, "trailing content after edge section"));
    }

    TriangleMesh::new(nodes, triangles, edges)
        .map_err(|e| e.context(format!("invalid mesh in {}", path.display())))
}
