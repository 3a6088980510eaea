//! Legacy VTK ASCII export.

use std::fmt::Write as _;

use crate::mesh::TetMesh;
use crate::Point3;

/// Optional point and cell data attached to an export.
#[derive(Default, Debug, Clone)]
pub struct VtkData {
    pub point_vectors: Vec<(String, Vec<Point3>)>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
}

pub fn write_vtk(mesh: &TetMesh, title: &str, data: &VtkData) -> String {
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    writeln!(s, "CELLS {} {}", mesh.num_tets(), 5 * mesh.num_tets()).unwrap();
    for t in &mesh.tets {
        writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.num_tets()).unwrap();
    for _ in &mesh.tets {
        writeln!(s, "10").unwrap();
    }
    if !data.point_vectors.is_empty() || !data.point_scalars.is_empty() {
        writeln!(s, "POINT_DATA {}", mesh.num_vertices()).unwrap();
        for (name, vals) in &data.point_scalars {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for v in vals {
                writeln!(s, "{v:?}").unwrap();
            }
        }
        for (name, vals) in &data.point_vectors {
            writeln!(s, "VECTORS {name} double").unwrap();
            for v in vals {
                writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
            }
        }
    }
    if !data.cell_scalars.is_empty() {
        writeln!(s, "CELL_DATA {}", mesh.num_tets()).unwrap();
        for (name, vals) in &data.cell_scalars {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for v in vals {
                writeln!(s, "{v:?}").unwrap();
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::single_tet;

    #[test]
    fn header_and_counts() {
        let m = single_tet();
        let s = write_vtk(&m, "t", &VtkData::default());
        assert!(s.starts_with("# vtk DataFile Version 3.0"));
        assert!(s.contains("POINTS 4 double"));
        assert!(s.contains("CELLS 1 5"));
    }
}
