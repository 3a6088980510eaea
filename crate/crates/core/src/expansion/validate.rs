use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expansion::ExpandedDomain;
use crate::geom::Aabb;
use crate::lipschitz::{check_cone_at_points, face_lattice, AxisRule, ConeCheckOptions, UniformConeReport};
use crate::mesh::{Dissection, TetMesh, TET_EDGES, TET_FACES};
use crate::transversal::{boundary_normal_field, segment_distance, DirectionField};
use crate::Point3;

const MAX_LISTED: usize = 32;

/// Whether two tetrahedra have overlapping interiors, by the separating
/// axis test over face normals and edge-edge cross products. Projections
/// that only touch (within `eps`) count as separated.
pub fn tets_overlap(a: &[Point3; 4], b: &[Point3; 4], eps: f64) -> bool {
    let separated_along = |axis: Point3| -> bool {
        let Some(n) = axis.try_normalize(1e-14) else { return false };
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in a {
            let d = p.dot(n);
            amin = amin.min(d);
            amax = amax.max(d);
        }
        for p in b {
            let d = p.dot(n);
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        amax <= bmin + eps || bmax <= amin + eps
    };
    for t in [a, b] {
        for f in TET_FACES {
            if separated_along((t[f[1]] - t[f[0]]).cross(t[f[2]] - t[f[0]])) {
                return false;
            }
        }
    }
    for ea in TET_EDGES {
        for eb in TET_EDGES {
            if separated_along((a[ea[1]] - a[ea[0]]).cross(b[eb[1]] - b[eb[0]])) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisjointReport {
    pub passed: bool,
    pub pairs_tested: usize,
    /// `(Ω tet, Ω^e tet)` pairs with overlapping interiors.
    pub overlaps: Vec<[usize; 2]>,
    pub n_overlaps: usize,
    /// Overlapping pairs of Ω^e tets.
    pub self_overlaps: Vec<[usize; 2]>,
    pub n_self_overlaps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharedBoundaryReport {
    pub passed: bool,
    pub faces_match: bool,
    pub edges_match: bool,
    pub shared_faces: usize,
    pub gamma_faces: usize,
    pub shared_edges: usize,
    pub pi_edges: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeLocusReport {
    pub passed: bool,
    pub n_samples: usize,
    pub gamma_top: UniformConeReport,
    pub psi: UniformConeReport,
    pub pi: UniformConeReport,
    pub pi_t: UniformConeReport,
    pub tilde_near_pi: UniformConeReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeReport {
    pub omega: f64,
    pub omega_e: f64,
    pub omega_tilde: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaReport {
    pub omega_tilde: f64,
    pub expected: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub passed: bool,
    pub disjoint: DisjointReport,
    pub shared_boundary: SharedBoundaryReport,
    pub cones: ConeLocusReport,
    pub volume: VolumeReport,
    pub area: AreaReport,
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationOptions {
    pub theta: f64,
    pub height: f64,
    /// Lattice density per face for cone sample points.
    pub density: usize,
    /// Lower bound on cone samples per domain (Ω^e loci together, and Ω̃).
    pub min_samples: usize,
    pub seed: u64,
}

impl ValidationOptions {
    pub fn new(theta: f64, height: f64) -> Self {
        Self { theta, height, density: 2, min_samples: 10_000, seed: crate::sampling::DEFAULT_SEED }
    }
}

fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut s = f;
    s.sort_unstable();
    s
}

fn face_edges(f: [usize; 3]) -> [[usize; 2]; 3] {
    let e = |a: usize, b: usize| [a.min(b), a.max(b)];
    [e(f[0], f[1]), e(f[1], f[2]), e(f[0], f[2])]
}

fn check_disjoint(exp: &ExpandedDomain, original: &TetMesh) -> DisjointReport {
    let eps = 1e-10 * exp.omega_tilde.bbox().diagonal();
    let mut r = DisjointReport {
        passed: true,
        pairs_tested: 0,
        overlaps: Vec::new(),
        n_overlaps: 0,
        self_overlaps: Vec::new(),
        n_self_overlaps: 0,
    };
    let e = &exp.omega_e;
    for te in 0..e.num_tets() {
        let pe = e.tet_points(te);
        let b = Aabb::from_points(pe);
        for to in original.locator().candidates(&b) {
            r.pairs_tested += 1;
            if tets_overlap(&original.tet_points(to), &pe, eps) {
                r.n_overlaps += 1;
                if r.overlaps.len() < MAX_LISTED {
                    r.overlaps.push([to, te]);
                }
            }
        }
        for tf in e.locator().candidates(&b) {
            if tf <= te {
                continue;
            }
            r.pairs_tested += 1;
            if tets_overlap(&e.tet_points(tf), &pe, eps) {
                r.n_self_overlaps += 1;
                if r.self_overlaps.len() < MAX_LISTED {
                    r.self_overlaps.push([te, tf]);
                }
            }
        }
    }
    r.passed = r.n_overlaps == 0 && r.n_self_overlaps == 0;
    r
}

fn check_shared(exp: &ExpandedDomain, original: &TetMesh, dissection: &Dissection) -> SharedBoundaryReport {
    let map = |f: [usize; 3]| sorted3(f.map(|v| exp.e_to_tilde[v]));
    let e_faces: BTreeSet<[usize; 3]> = exp.omega_e.boundary_faces.iter().map(|&f| map(f)).collect();
    let o_faces: BTreeSet<[usize; 3]> = original.boundary_faces.iter().map(|&f| sorted3(f)).collect();
    let shared: BTreeSet<[usize; 3]> = e_faces.intersection(&o_faces).copied().collect();
    let gamma: BTreeSet<[usize; 3]> = dissection.gamma_faces.iter().map(|&f| sorted3(original.boundary_faces[f])).collect();
    let bottom: BTreeSet<usize> = exp.gamma_bottom.iter().copied().collect();
    let e_edges: BTreeSet<[usize; 2]> = exp
        .omega_e
        .boundary_faces
        .iter()
        .enumerate()
        .filter(|(i, _)| !bottom.contains(i))
        .flat_map(|(_, &f)| face_edges(f.map(|v| exp.e_to_tilde[v])))
        .collect();
    let o_edges: BTreeSet<[usize; 2]> = dissection
        .gamma2_faces
        .iter()
        .flat_map(|&f| face_edges(original.boundary_faces[f]))
        .collect();
    let shared_edges: BTreeSet<[usize; 2]> = e_edges.intersection(&o_edges).copied().collect();
    let pi: BTreeSet<[usize; 2]> = dissection.pi_edges.iter().copied().collect();
    let faces_match = shared == gamma;
    let edges_match = shared_edges == pi;
    SharedBoundaryReport {
        passed: faces_match && edges_match,
        faces_match,
        edges_match,
        shared_faces: shared.len(),
        gamma_faces: gamma.len(),
        shared_edges: shared_edges.len(),
        pi_edges: pi.len(),
    }
}

fn face_samples(mesh: &TetMesh, faces: &[usize], density: usize) -> Vec<Point3> {
    faces.iter().flat_map(|&f| face_lattice(mesh.face_points(f), density)).collect()
}

fn chain_samples(mesh: &TetMesh, chains: &[Vec<usize>]) -> Vec<Point3> {
    let mut out = Vec::new();
    for c in chains {
        for (i, &v) in c.iter().enumerate() {
            let w = c[(i + 1) % c.len()];
            out.push(mesh.vertices[v]);
            out.push(mesh.vertices[v].lerp(mesh.vertices[w], 0.5));
        }
    }
    out
}

fn cones_at(
    mesh: &TetMesh,
    axes: &dyn DirectionField,
    pts: &[Point3],
    opts: &ValidationOptions,
    per_point: usize,
) -> Result<UniformConeReport> {
    let mut o = ConeCheckOptions::new(opts.theta, opts.height);
    o.axis = AxisRule::Search(Some(axes));
    o.samples_per_point = per_point;
    o.seed = opts.seed;
    check_cone_at_points(mesh, pts, &o)
}

fn check_cones(exp: &ExpandedDomain, original: &TetMesh, dissection: &Dissection, opts: &ValidationOptions) -> Result<ConeLocusReport> {
    let e = &exp.omega_e;
    let tilde = &exp.omega_tilde;
    let top = face_samples(e, &exp.gamma_top, opts.density);
    let psi = face_samples(e, &exp.psi_faces, opts.density);
    let pi_tilde: Vec<Vec<usize>> = dissection.pi_chains.to_vec();
    let pi = chain_samples(original, &pi_tilde);
    let pi_t = chain_samples(tilde, &exp.pi_t);
    // boundary points of Ω̃ within one cone height of Π
    let segs: Vec<(Point3, Point3)> = dissection
        .pi_edges
        .iter()
        .map(|e| (original.vertices[e[0]], original.vertices[e[1]]))
        .collect();
    let near_pi: Vec<Point3> = crate::lipschitz::boundary_sample_points(tilde, opts.density)
        .into_iter()
        .filter(|p| segs.iter().any(|(a, b)| segment_distance(*p, *p, *a, *b) <= opts.height))
        .chain(pi.iter().copied())
        .collect();
    let n_e = top.len() + psi.len() + pi.len() + pi_t.len();
    let per_e = opts.min_samples.div_ceil(n_e.max(1)).max(8);
    let per_t = opts.min_samples.div_ceil(near_pi.len().max(1)).max(8);
    let e_axes = boundary_normal_field(e)?;
    let t_axes = boundary_normal_field(tilde)?;
    let gamma_top = cones_at(e, &e_axes, &top, opts, per_e)?;
    let psi = cones_at(e, &e_axes, &psi, opts, per_e)?;
    let pi = cones_at(e, &e_axes, &pi, opts, per_e)?;
    let pi_t = cones_at(e, &e_axes, &pi_t, opts, per_e)?;
    let tilde_near_pi = cones_at(tilde, &t_axes, &near_pi, opts, per_t)?;
    let all = [&gamma_top, &psi, &pi, &pi_t, &tilde_near_pi];
    Ok(ConeLocusReport {
        passed: all.iter().all(|r| r.passed && !r.vacuous),
        n_samples: all.iter().map(|r| r.n_samples).sum(),
        gamma_top,
        psi,
        pi,
        pi_t,
        tilde_near_pi,
    })
}

/// Check disjointness, boundary bookkeeping and cone properties of an
/// expanded domain.
pub fn validate_expansion(
    exp: &ExpandedDomain,
    original: &TetMesh,
    dissection: &Dissection,
    opts: &ValidationOptions,
) -> Result<ExpansionReport> {
    let disjoint = check_disjoint(exp, original);
    let shared_boundary = check_shared(exp, original, dissection);
    let cones = check_cones(exp, original, dissection, opts)?;
    let volume = {
        let (o, e, t) = (original.volume(), exp.omega_e.volume(), exp.omega_tilde.volume());
        VolumeReport { omega: o, omega_e: e, omega_tilde: t, error: (t - o - e).abs() }
    };
    let area = {
        let gamma: f64 = dissection.gamma_faces.iter().map(|&f| original.face_area(f)).sum();
        let top: f64 = exp.gamma_top.iter().map(|&f| exp.omega_e.face_area(f)).sum();
        let psi: f64 = exp.psi_faces.iter().map(|&f| exp.omega_e.face_area(f)).sum();
        let expected = original.boundary_area() - gamma + top + psi;
        let got = exp.omega_tilde.boundary_area();
        AreaReport { omega_tilde: got, expected, error: (got - expected).abs() }
    };
    let passed = disjoint.passed && shared_boundary.passed && cones.passed && volume.error <= 1e-10 && area.error <= 1e-10;
    Ok(ExpansionReport { passed, disjoint, shared_boundary, cones, volume, area })
}

/// Everything `validate` needs to re-check an expansion from disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionArtifact {
    pub original: TetMesh,
    pub dissection: Dissection,
    pub expanded: ExpandedDomain,
    pub t0_estimate: Option<f64>,
    pub kappa: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::expansion::{build_protrusion, build_protrusion_unchecked, TransportMap};
    use crate::mesh::{box_mesh, dissect_boundary, lshape_mesh, select_faces, single_tet, FacePredicate};
    use crate::transversal::{build_box_cover, build_field, ConstantField};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn unit_tet(shift: Point3) -> [Point3; 4] {
        [Point3::zero(), Point3::new(1., 0., 0.), Point3::new(0., 1., 0.), Point3::new(0., 0., 1.)].map(|p| p + shift)
    }

    #[test]
    fn sat_basic_cases() {
        let a = unit_tet(Point3::zero());
        assert!(tets_overlap(&a, &a, 1e-12));
        assert!(tets_overlap(&a, &unit_tet(Point3::splat(0.1)), 1e-12));
        assert!(!tets_overlap(&a, &unit_tet(Point3::new(2., 0., 0.)), 1e-12));
        // touching across the slanted face
        let b = [Point3::new(1., 0., 0.), Point3::new(0., 1., 0.), Point3::new(0., 0., 1.), Point3::splat(1.0)];
        assert!(!tets_overlap(&a, &b, 1e-12));
        // edge-edge separation only
        let c = [Point3::new(0.6, 0.6, -0.1), Point3::new(0.6, 0.6, 0.5), Point3::new(2., 2., -0.1), Point3::new(2., 2.1, 0.5)];
        assert!(!tets_overlap(&a, &c, 1e-12));
    }

    proptest! {
        #[test]
        fn sat_agrees_with_point_sampling(dx in -1.5f64..1.5, dy in -1.5f64..1.5, dz in -1.5f64..1.5) {
            let a = unit_tet(Point3::zero());
            let b = unit_tet(Point3::new(dx, dy, dz));
            // a point in the interior of both proves overlap
            let mut witness = false;
            let m = single_tet();
            let shifted = TetMesh::new(b.to_vec(), vec![[0, 1, 2, 3]]).unwrap();
            for u in crate::sampling::Halton::<3>::new().take(2000) {
                let l = crate::sampling::cube_to_tet(u);
                let p = a[0] * l[0] + a[1] * l[1] + a[2] * l[2] + a[3] * l[3];
                if m.signed_distance(p) > 1e-9 && shifted.signed_distance(p) > 1e-9 {
                    witness = true;
                    break;
                }
            }
            if witness {
                prop_assert!(tets_overlap(&a, &b, 1e-12));
            }
            if !tets_overlap(&a, &b, 1e-12) {
                prop_assert!(!witness);
            }
        }
    }

    fn cube_top(map: &TransportMap, theta: f64) -> ExpansionReport {
        let m = box_mesh(2, 2, 2);
        let g = select_faces(&m, &FacePredicate::parse("z==1").unwrap());
        let d = dissect_boundary(&m, &g).unwrap();
        let e = build_protrusion(&m, &d, map, 0.2, 2).unwrap();
        let mut opts = ValidationOptions::new(theta, 0.1);
        opts.min_samples = 2000;
        validate_expansion(&e, &m, &d, &opts).unwrap()
    }

    fn blended_cube_field() -> TransportMap {
        let m = box_mesh(2, 2, 2);
        let g = select_faces(&m, &FacePredicate::parse("z==1").unwrap());
        let d = dissect_boundary(&m, &g).unwrap();
        TransportMap::new(Arc::new(build_field(build_box_cover(&m, &d).unwrap()).unwrap()))
    }

    #[test]
    fn cube_slab_validates() {
        let map = TransportMap::new(Arc::new(ConstantField::new(Point3::new(0., 0., 1.)).unwrap()));
        let r = cube_top(&map, std::f64::consts::PI / 8.0);
        assert!(r.disjoint.passed);
        assert!(r.shared_boundary.faces_match && r.shared_boundary.edges_match);
        assert!(r.volume.error < 1e-10 && r.area.error < 1e-10);
        assert!(r.cones.passed, "{:?}", r.cones);
        assert!(r.passed);
    }

    #[test]
    fn blended_cube_expansion_validates_with_narrow_cones() {
        let r = cube_top(&blended_cube_field(), std::f64::consts::PI / 16.0);
        assert!(r.passed, "{:?}", r.cones);
    }

    // The transported corners are trihedral with two 45 degree lateral walls;
    // the widest inscribed cone there has half-angle asin(1/sqrt(2(1+sqrt2)^2+1)).
    #[test]
    fn blended_cube_corners_reject_wide_cones() {
        let bound = (1.0 / (2.0 * (1.0 + 2f64.sqrt()).powi(2) + 1.0).sqrt()).asin();
        assert!(bound < std::f64::consts::PI / 8.0);
        let r = cube_top(&blended_cube_field(), std::f64::consts::PI / 8.0);
        assert!(r.disjoint.passed && r.shared_boundary.passed);
        assert!(!r.cones.pi_t.passed);
        assert!(r.cones.gamma_top.passed && r.cones.pi.passed);
    }

    #[test]
    fn oversized_lshape_expansion_overlaps() {
        let m = lshape_mesh(2);
        let g = select_faces(&m, &FacePredicate::parse("x==1&y>=1|y==1&x>=1").unwrap());
        let d = dissect_boundary(&m, &g).unwrap();
        let f = build_field(build_box_cover(&m, &d).unwrap()).unwrap();
        let map = TransportMap::new(Arc::new(f));
        assert!(matches!(build_protrusion(&m, &d, &map, 0.6, 1), Err(Error::InvertedPrism { .. })));
        let e = build_protrusion_unchecked(&m, &d, &map, 0.6, 1).unwrap();
        let r = check_disjoint(&e, &m);
        assert!(!r.passed);
        assert!(r.n_self_overlaps > 0);
    }
}
