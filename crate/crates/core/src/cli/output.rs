//! CSV and legacy-VTK writers.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use vtkio::model::{
    Attribute, Attributes, ByteOrder, CellType, Cells, DataSet, UnstructuredGridPiece, Version, VertexNumbers, Vtk,
};

use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::fem::DofMap;
use crate::format::g17;
use crate::mesh::Region;
use crate::model::Field;
use crate::timestepping::{LedgerRow, SolutionState};

pub const LEDGER_HEADER: &str =
    "step,t,energy,dissipation_v,dissipation_q,mismatch_n,mismatch_t,load,load_norm_sq,lhs,rhs,residual";

pub fn ledger_line(r: &LedgerRow) -> String {
    let vals = [
        r.time,
        r.energy,
        r.dissipation_v,
        r.dissipation_q,
        r.mismatch_n,
        r.mismatch_t,
        r.load,
        r.load_norm_sq,
        r.lhs,
        r.rhs,
        r.residual,
    ];
    let mut s = r.step.to_string();
    for v in vals {
        s.push(',');
        s.push_str(&g17(v));
    }
    s
}

/// Line-buffered CSV sink that flushes after every row.
pub struct LedgerCsv {
    out: BufWriter<File>,
}

impl LedgerCsv {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{LEDGER_HEADER}")?;
        out.flush()?;
        Ok(LedgerCsv { out })
    }

    pub fn push(&mut self, r: &LedgerRow) -> Result<()> {
        writeln!(self.out, "{}", ledger_line(r))?;
        self.out.flush()?;
        Ok(())
    }
}

/// Per-vertex values of one field; vertices outside its region read zero.
fn at_vertices(map: &DofMap, coeffs: &[f64], n_vertices: usize, comps: usize) -> Vec<f64> {
    let nc = map.components();
    let mut out = vec![0.0; n_vertices * comps];
    for v in 0..n_vertices {
        if let Some(d) = map.vertex_dof(v) {
            for c in 0..nc {
                out[comps * v + c] = coeffs[nc * d + c];
            }
        }
    }
    out
}

/// Legacy ASCII snapshot with vertex values of every field.
pub fn snapshot_vtk(asm: &Assembler, s: &SolutionState) -> Vtk {
    let mesh = asm.mesh();
    let sp = asm.spaces();
    let nv = mesh.nodes().len();
    let points: Vec<f64> = mesh.nodes().iter().flat_map(|p| [p[0], p[1], 0.0]).collect();
    let mut vertices = Vec::with_capacity(4 * mesh.triangles().len());
    for t in mesh.triangles() {
        vertices.push(3u32);
        vertices.extend(t.vertices.iter().map(|&v| v as u32));
    }
    let vectors = |name: &str, map: &DofMap, x: &[f64]| Attribute::vectors(name).with_data(at_vertices(map, x, nv, 3));
    let scalars = |name: &str, map: &DofMap, x: &[f64]| Attribute::scalars(name, 1).with_data(at_vertices(map, x, nv, 1));
    let region: Vec<i32> = mesh
        .triangles()
        .iter()
        .map(|t| if t.region == Region::Fluid { 0 } else { 1 })
        .collect();
    let data = Attributes {
        point: vec![
            vectors(Field::Velocity.as_str(), &sp.velocity, &s.v),
            vectors(Field::Displacement.as_str(), &sp.displacement, &s.u),
            vectors(Field::Flux.as_str(), &sp.flux, &s.q),
            scalars(Field::FluidPressure.as_str(), &sp.fluid_pressure, &s.p_f),
            scalars("p_p", &sp.pseudo, &s.p_p),
            scalars(Field::Xi.as_str(), &sp.pseudo, &s.xi),
            scalars(Field::Eta.as_str(), &sp.pseudo, &s.eta),
        ],
        cell: vec![Attribute::scalars("region", 1).with_data(region)],
    };
    Vtk {
        version: Version::new((3, 0)),
        title: format!("step {} t={}", s.step, g17(s.time)),
        byte_order: ByteOrder::BigEndian,
        file_path: None,
        data: DataSet::inline(UnstructuredGridPiece {
            points: points.into(),
            cells: Cells {
                cell_verts: VertexNumbers::Legacy {
                    num_cells: mesh.triangles().len() as u32,
                    vertices,
                },
                types: vec![CellType::Triangle; mesh.triangles().len()],
            },
            data,
        }),
    }
}

pub fn write_snapshot(asm: &Assembler, s: &SolutionState, path: &Path) -> Result<()> {
    snapshot_vtk(asm, s)
        .export_ascii(path)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())).context(format!("writing {}", path.display())))
}

/// Every coefficient of every field: `field,index,x,y,component,value`.
pub fn dofs_csv(asm: &Assembler, s: &SolutionState) -> String {
    let sp = asm.spaces();
    let mut out = String::from("field,index,x,y,component,value\n");
    for f in Field::ALL {
        let map = sp.map(f);
        let nc = map.components();
        for (i, x) in s.field(f).iter().enumerate() {
            let p = map.points()[i / nc];
            let _ = writeln!(out, "{},{},{},{},{},{}", f.as_str(), i, g17(p[0]), g17(p[1]), i % nc, g17(*x));
        }
    }
    out
}
