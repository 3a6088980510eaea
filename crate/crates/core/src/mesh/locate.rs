use crate::geom::{self, Aabb};
use crate::mesh::{TetMesh, LOCATE_TOL};
use crate::Point3;

/// Uniform-grid acceleration structure over tetrahedron bounding boxes.
#[derive(Debug, Clone)]
pub struct PointLocator {
    bbox: Aabb<f64>,
    dims: [usize; 3],
    cell: Point3,
    cells: Vec<Vec<usize>>,
    tet_boxes: Vec<Aabb<f64>>,
    face_boxes: Vec<Aabb<f64>>,
}

impl PointLocator {
    pub fn new(mesh: &TetMesh) -> Self {
        let tet_boxes: Vec<Aabb<f64>> = (0..mesh.num_tets())
            .map(|t| Aabb::from_points(mesh.tet_points(t)))
            .collect();
        let bbox0 = mesh.bbox();
        let pad = 1e-9 * bbox0.diagonal().max(1e-300);
        let bbox = bbox0.inflate(pad);
        let ext = bbox.max - bbox.min;
        let target = (mesh.num_tets() as f64 / 2.0).max(1.0);
        let vol = ext.x * ext.y * ext.z;
        let s = (vol / target).cbrt().max(1e-300);
        let dims = [
            ((ext.x / s).ceil() as usize).clamp(1, 128),
            ((ext.y / s).ceil() as usize).clamp(1, 128),
            ((ext.z / s).ceil() as usize).clamp(1, 128),
        ];
        let cell = Point3::new(ext.x / dims[0] as f64, ext.y / dims[1] as f64, ext.z / dims[2] as f64);
        let mut loc = Self {
            bbox,
            dims,
            cell,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
            tet_boxes,
            face_boxes: (0..mesh.boundary_faces.len())
                .map(|f| Aabb::from_points(mesh.face_points(f)))
                .collect(),
        };
        for t in 0..mesh.num_tets() {
            let b = loc.tet_boxes[t].inflate(pad);
            let (lo, hi) = loc.cell_range(&b);
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let c = loc.index(i, j, k);
                        loc.cells[c].push(t);
                    }
                }
            }
        }
        loc
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    fn coord(&self, p: Point3, axis: usize) -> usize {
        let f = (p[axis] - self.bbox.min[axis]) / self.cell[axis];
        (f.floor().max(0.0) as usize).min(self.dims[axis] - 1)
    }

    fn cell_range(&self, b: &Aabb<f64>) -> ([usize; 3], [usize; 3]) {
        let lo = [self.coord(b.min, 0), self.coord(b.min, 1), self.coord(b.min, 2)];
        let hi = [self.coord(b.max, 0), self.coord(b.max, 1), self.coord(b.max, 2)];
        (lo, hi)
    }

    pub fn locate(&self, mesh: &TetMesh, q: Point3) -> Option<usize> {
        if !self.bbox.contains(q, 0.0) {
            return None;
        }
        let c = self.index(self.coord(q, 0), self.coord(q, 1), self.coord(q, 2));
        self.cells[c].iter().copied().find(|&t| {
            geom::tet_barycentric(&mesh.tet_points(t), q)
                .map(|l| l.iter().all(|&x| x >= -LOCATE_TOL))
                .unwrap_or(false)
        })
    }

    /// Sorted indices of tetrahedra whose bounding box meets `b`.
    pub fn candidates(&self, b: &Aabb<f64>) -> Vec<usize> {
        if !self.bbox.overlaps(b) {
            return Vec::new();
        }
        let (lo, hi) = self.cell_range(b);
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    for &t in &self.cells[self.index(i, j, k)] {
                        if self.tet_boxes[t].overlaps(b) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn tet_box(&self, t: usize) -> &Aabb<f64> {
        &self.tet_boxes[t]
    }

    pub fn boundary_distance(&self, mesh: &TetMesh, q: Point3) -> f64 {
        let mut best = f64::INFINITY;
        for (f, b) in self.face_boxes.iter().enumerate() {
            if b.distance(q) >= best {
                continue;
            }
            let p = mesh.face_points(f);
            best = best.min(geom::point_triangle_distance(q, p[0], p[1], p[2]));
        }
        best
    }

    /// Closest boundary face to `q` and its distance.
    pub fn closest_boundary_face(&self, mesh: &TetMesh, q: Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (f, b) in self.face_boxes.iter().enumerate() {
            if b.distance(q) >= best.1 {
                continue;
            }
            let p = mesh.face_points(f);
            let d = geom::point_triangle_distance(q, p[0], p[1], p[2]);
            if d < best.1 {
                best = (f, d);
            }
        }
        best
    }
}
