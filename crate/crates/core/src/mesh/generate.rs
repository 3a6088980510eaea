//! Structured fixtures.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::TetMesh;
use crate::Point3;

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Split the cells listed by `keep` of an `n[0] × n[1] × n[2]` grid over
/// `[min, max]` into six tetrahedra each (Kuhn split along the main
/// diagonal, so neighbouring cells agree on their shared diagonals).
fn grid_mesh(min: Point3, max: Point3, n: [usize; 3], keep: impl Fn(usize, usize, usize) -> bool) -> TetMesh {
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let h = Point3::new(
        (max.x - min.x) / n[0] as f64,
        (max.y - min.y) / n[1] as f64,
        (max.z - min.z) / n[2] as f64,
    );
    let mut vid = |g: [usize; 3], vertices: &mut Vec<Point3>| -> usize {
        *index.entry(g).or_insert_with(|| {
            let coord = |a: usize| {
                if g[a] == n[a] {
                    max[a]
                } else {
                    min[a] + g[a] as f64 * h[a]
                }
            };
            vertices.push(Point3::new(coord(0), coord(1), coord(2)));
            vertices.len() - 1
        })
    };
    // Create vertices in lexicographic order first for stable numbering.
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                let touches = (i.saturating_sub(1)..=i.min(n[0] - 1)).any(|ci| {
                    (j.saturating_sub(1)..=j.min(n[1] - 1))
                        .any(|cj| (k.saturating_sub(1)..=k.min(n[2] - 1)).any(|ck| keep(ci, cj, ck)))
                });
                if touches {
                    vid([i, j, k], &mut vertices);
                }
            }
        }
    }
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                if !keep(i, j, k) {
                    continue;
                }
                for p in PERMS {
                    let mut g = [i, j, k];
                    let mut t = [0usize; 4];
                    t[0] = vid(g, &mut vertices);
                    for (s, &axis) in p.iter().enumerate() {
                        g[axis] += 1;
                        t[s + 1] = vid(g, &mut vertices);
                    }
                    tets.push(t);
                }
            }
        }
    }
    TetMesh::new(vertices, tets).expect("structured mesh is valid")
}

/// Structured mesh of `[min, max]` with `n` cells per axis.
pub fn box_mesh_in(min: Point3, max: Point3, n: [usize; 3]) -> TetMesh {
    assert!(n.iter().all(|&k| k >= 1), "box mesh needs at least one cell per axis");
    grid_mesh(min, max, n, |_, _, _| true)
}

/// Structured mesh of the unit cube: `6 nx ny nz` tetrahedra.
pub fn box_mesh(nx: usize, ny: usize, nz: usize) -> TetMesh {
    box_mesh_in(Point3::zero(), Point3::splat(1.0), [nx, ny, nz])
}

/// Checked variant of [`box_mesh`].
pub fn generate_box_mesh(nx: usize, ny: usize, nz: usize) -> Result<TetMesh> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidParameter("box resolution must be positive".into()));
    }
    Ok(box_mesh(nx, ny, nz))
}

/// L-shaped prism `[0,2]² × [0,1]` minus `[1,2]² × [0,1]`, `n` cells per unit length.
pub fn lshape_mesh(n: usize) -> TetMesh {
    assert!(n >= 1);
    grid_mesh(Point3::zero(), Point3::new(2.0, 2.0, 1.0), [2 * n, 2 * n, n], |i, j, _| i < n || j < n)
}

/// Thin slab `[0,1]² × [0, thickness]` with one cell layer.
pub fn slab_mesh(n: usize, thickness: f64) -> TetMesh {
    box_mesh_in(Point3::zero(), Point3::new(1.0, 1.0, thickness), [n, n, 1])
}

/// Reference tetrahedron.
pub fn single_tet() -> TetMesh {
    TetMesh::new(
        vec![
            Point3::new(0., 0., 0.),
            Point3::new(1., 0., 0.),
            Point3::new(0., 1., 0.),
            Point3::new(0., 0., 1.),
        ],
        vec![[0, 1, 2, 3]],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        let m = box_mesh(1, 1, 1);
        assert_eq!((m.num_tets(), m.num_vertices()), (6, 8));
        assert_eq!(m.boundary_faces.len(), 12);
        let m = box_mesh(2, 2, 2);
        assert_eq!((m.num_tets(), m.num_vertices()), (48, 27));
        let vol: f64 = (0..m.num_tets()).map(|t| m.tet_volume(t).abs()).sum();
        assert!((vol - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lshape_volume_and_counts() {
        let m = lshape_mesh(2);
        assert_eq!(m.num_tets(), 18 * 8);
        assert!((m.volume() - 3.0).abs() < 1e-13);
        // 8 planar sides plus bottom/top
        assert!((m.boundary_area() - (3.0 * 2.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(generate_box_mesh(0, 1, 1).is_err());
    }
}
