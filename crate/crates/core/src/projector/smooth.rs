//! Pointwise evaluation of the smoothing operators.
//!
//! For `x` in a tetrahedron `K` with barycentric coordinates `λ`, the map
//! `x̃ = Σ λ_i(x) y_i` is averaged over independent ball points `y_i` with
//! the product kernel, using the tensorized ball rule (6⁴ nodes). The
//! pullback is the identity, `Jᵀ`, `det J · J⁻¹` or `det J` with
//! `J = dx̃/dx = Σ y_i ⊗ ∇λ_i`.

use crate::error::{Error, Result};
use crate::fe::{FeComplex, Space, Value};
use crate::geom::{self, Mat3};
use crate::mesh::TetMesh;
use crate::projector::assemble::integrate_form;
use crate::projector::balls::BallSystem;
use crate::projector::clip::Simplex;
use crate::Point3;

/// `S f(x)` for `x` in tetrahedron `t` of `mesh`.
pub fn smooth(
    space: Space,
    f: &dyn Fn(Point3) -> Result<Value>,
    x: Point3,
    t: usize,
    mesh: &TetMesh,
    balls: &BallSystem,
) -> Result<Value> {
    let pts = mesh.tet_points(t);
    let lambda = geom::tet_barycentric(&pts, x).ok_or(Error::DegenerateTet { index: t, volume: mesh.tet_volume(t) })?;
    let grads = geom::barycentric_gradients(&pts).ok_or(Error::DegenerateTet { index: t, volume: mesh.tet_volume(t) })?;
    let nodes: Vec<Vec<(Point3, f64)>> = mesh.tets[t].iter().map(|&v| balls.weight(v).weighted_nodes()).collect();
    let vol_scale = 6.0 * mesh.tet_volume(t).abs();
    let det_tol = 1e-14 * balls.h.powi(3);
    let mut acc_s = 0.0;
    let mut acc_v = Point3::zero();
    for &(y0, w0) in &nodes[0] {
        for &(y1, w1) in &nodes[1] {
            for &(y2, w2) in &nodes[2] {
                for &(y3, w3) in &nodes[3] {
                    let w = w0 * w1 * w2 * w3;
                    let y = [y0, y1, y2, y3];
                    let xt = y0 * lambda[0] + y1 * lambda[1] + y2 * lambda[2] + y3 * lambda[3];
                    let jac = || {
                        (0..4).fold(Mat3::zero(), |m, i| m.add(&Mat3::outer(y[i], grads[i])))
                    };
                    match space {
                        Space::G => acc_s += w * f(xt)?.scalar(),
                        Space::C => acc_v += jac().transpose().mul_vec(f(xt)?.vector()) * w,
                        Space::D => {
                            let j = jac();
                            let det = j.det();
                            if det * vol_scale <= det_tol {
                                return Err(Error::SingularJacobian { det, node: xt });
                            }
                            let inv = j.inverse().ok_or(Error::SingularJacobian { det, node: xt })?;
                            acc_v += inv.mul_vec(f(xt)?.vector()) * (w * det);
                        }
                        Space::O => acc_s += w * jac().det() * f(xt)?.scalar(),
                    }
                }
            }
        }
    }
    Ok(if space.is_scalar() { Value::Scalar(acc_s) } else { Value::Vector(acc_v) })
}

/// Canonical dofs of `S f` computed pointwise: the dof functional of each
/// entity is applied to `smooth` by quadrature on the entity, inside the
/// lowest-index tetrahedron containing it. Slow; used as a cross-check of
/// the exchanged-integral assembly.
pub fn smoothed_dofs_pointwise(
    space: Space,
    complex: &FeComplex,
    balls: &BallSystem,
    f: &dyn Fn(Point3) -> Result<Value>,
    rows: &[usize],
) -> Result<Vec<f64>> {
    let mesh = &complex.mesh;
    let owner = |verts: &[usize]| -> usize {
        (0..mesh.num_tets()).find(|&t| verts.iter().all(|v| mesh.tets[t].contains(v))).expect("entity belongs to a tet")
    };
    let v = &mesh.vertices;
    rows.iter()
        .map(|&row| {
            let (t, s) = match space {
                Space::G => (owner(&[row]), Simplex::Point(v[row])),
                Space::C => {
                    let [a, b] = complex.edges[row];
                    (owner(&[a, b]), Simplex::Segment([v[a], v[b]]))
                }
                Space::D => {
                    let [a, b, c] = complex.faces[row];
                    (owner(&[a, b, c]), Simplex::Triangle([v[a], v[b], v[c]]))
                }
                Space::O => (row, Simplex::Tet(mesh.tet_points(row))),
            };
            integrate_form(space, &s, &|x| smooth(space, f, x, t, mesh, balls))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::build_complex;
    use crate::mesh::box_mesh;
    use crate::projector::assemble::{smoothed_dofs, Evaluator};
    use crate::projector::balls::BallParams;
    use crate::sampling;
    use rand::Rng;

    fn setup() -> (FeComplex, BallSystem) {
        let m = box_mesh(1, 1, 1);
        let cx = build_complex(&m).unwrap();
        let mut balls = BallSystem::centred(&m, BallParams { delta: 0.15, c: 1.0, h: None }).unwrap();
        // move a few centres off their vertices so the weights are not centred
        balls.balls[3].center = balls.balls[3].center + Point3::new(0.02, -0.03, 0.05);
        balls.balls[6].center = balls.balls[6].center + Point3::new(-0.04, 0.01, 0.02);
        (cx, balls)
    }

    #[test]
    fn kernel_has_unit_mass_and_reproduces_affine() {
        let (cx, balls) = setup();
        let m = &cx.mesh;
        let one = |_: Point3| Ok(Value::Scalar(1.0));
        let p = |x: Point3| 0.3 + x.dot(Point3::new(1.0, -2.0, 0.5));
        let affine = |x: Point3| Ok(Value::Scalar(p(x)));
        let mut rng = sampling::rng(3);
        for t in 0..m.num_tets() {
            let pts = m.tet_points(t);
            for _ in 0..5 {
                let l = sampling::cube_to_tet([rng.random(), rng.random(), rng.random()]);
                let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2] + pts[3] * l[3];
                let s1 = smooth(Space::G, &one, x, t, m, &balls).unwrap().scalar();
                assert!((s1 - 1.0).abs() < 1e-12);
                // S p(x) = Σ λ_i p(a_i) = p(x) for affine p
                let sp = smooth(Space::G, &affine, x, t, m, &balls).unwrap().scalar();
                assert!((sp - p(x)).abs() < 1e-11, "{sp} {}", p(x));
            }
        }
    }

    #[test]
    fn gradient_intertwines_for_quadratics() {
        // grad S u = S grad u for u with affine gradient
        let (cx, balls) = setup();
        let m = &cx.mesh;
        let u = |x: Point3| x.x * x.y - 0.5 * x.z * x.z + 2.0 * x.x;
        let gu = |x: Point3| Point3::new(x.y + 2.0, x.x, -x.z);
        let su = |x: Point3| Ok(Value::Scalar(u(x)));
        let sg = |x: Point3| Ok(Value::Vector(gu(x)));
        let x = Point3::new(0.6, 0.3, 0.2);
        let t = m.locate(x).unwrap();
        let h = 1e-5;
        let mut fd = Point3::zero();
        for k in 0..3 {
            let e = Point3::axis(k) * h;
            fd[k] = (smooth(Space::G, &su, x + e, t, m, &balls).unwrap().scalar()
                - smooth(Space::G, &su, x - e, t, m, &balls).unwrap().scalar())
                / (2.0 * h);
        }
        let s = smooth(Space::C, &sg, x, t, m, &balls).unwrap().vector();
        assert!((fd - s).norm() < 1e-8, "{fd:?} {s:?}");
    }

    #[test]
    fn pointwise_matches_exchanged_integrals() {
        let (cx, balls) = setup();
        let nodes = balls.nodes();
        let cases: [(Space, &(dyn Fn(Point3) -> Value + Sync)); 4] = [
            (Space::G, &|x: Point3| Value::Scalar(x.x * x.x * x.y + x.z)),
            (Space::C, &|x: Point3| Value::Vector(Point3::new(x.y * x.z, x.x * x.x, 1.0 - x.y))),
            (Space::D, &|x: Point3| Value::Vector(Point3::new(x.z, x.x * x.y, x.y * x.y))),
            (Space::O, &|x: Point3| Value::Scalar(1.0 + x.x * x.y)),
        ];
        for (space, f) in cases {
            let src = Evaluator { space, eval: f, breaks: vec![] };
            let b = smoothed_dofs(space, &cx, &nodes, &src).unwrap();
            let rows: Vec<usize> = (0..cx.dim(space)).step_by(3).collect();
            let a = smoothed_dofs_pointwise(space, &cx, &balls, &|x| Ok(f(x)), &rows).unwrap();
            for (k, &r) in rows.iter().enumerate() {
                assert!((a[k] - b[r]).abs() < 1e-12, "{space:?} row {r}: {} {}", a[k], b[r]);
            }
        }
    }
}
