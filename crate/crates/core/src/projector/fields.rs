//! Built-in analytic test fields.
//!
//! Every field is `b(z)·q(x)` with the cut-off `b(z) = (z₀ − z)₊³`,
//! `z₀ = 0.8`, and a polynomial `q` of degree at most 2. They vanish for
//! `z ≥ 0.8`, so on the unit cube with Γ = {z = 1} they vanish on a
//! neighbourhood of Γ̄ and on every ball shifted into Ω^e. A field is a
//! polynomial of degree ≤ 5 on each side of the plane `z = z₀`, which is
//! recorded as a break plane so quadrature can split there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::{Field, Space, Value};
use crate::Plane3;
use crate::Point3;

pub const CUTOFF_Z: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogField {
    /// u = b·(1 + x + 2y² − xy)
    BumpScalar,
    /// grad u
    BumpGrad,
    /// v = b·(y², 1 + xz, x − y)
    BumpVector,
    /// curl v
    BumpCurl,
    /// w = b·(xy, z² − x, 1 + y)
    BumpFlux,
    /// div w
    BumpDiv,
    /// s = b·(1 + xy + z)
    BumpDensity,
    /// Zero field of the given type.
    Zero(Space),
}

pub const CATALOG: [CatalogField; 7] = [
    CatalogField::BumpScalar,
    CatalogField::BumpGrad,
    CatalogField::BumpVector,
    CatalogField::BumpCurl,
    CatalogField::BumpFlux,
    CatalogField::BumpDiv,
    CatalogField::BumpDensity,
];

fn bump(z: f64) -> (f64, f64) {
    let d = (CUTOFF_Z - z).max(0.0);
    (d * d * d, -3.0 * d * d)
}

impl CatalogField {
    pub fn name(&self) -> String {
        match self {
            CatalogField::BumpScalar => "bump-scalar".into(),
            CatalogField::BumpGrad => "bump-grad".into(),
            CatalogField::BumpVector => "bump-vector".into(),
            CatalogField::BumpCurl => "bump-curl".into(),
            CatalogField::BumpFlux => "bump-flux".into(),
            CatalogField::BumpDiv => "bump-div".into(),
            CatalogField::BumpDensity => "bump-density".into(),
            CatalogField::Zero(s) => format!("zero-{}", s.tag()),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        if let Some(t) = name.strip_prefix("zero-") {
            return Ok(CatalogField::Zero(Space::parse(t)?));
        }
        CATALOG
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown field `{name}`")))
    }

    /// Default input field for projecting into `space`.
    pub fn for_space(space: Space) -> Self {
        match space {
            Space::G => CatalogField::BumpScalar,
            Space::C => CatalogField::BumpVector,
            Space::D => CatalogField::BumpFlux,
            Space::O => CatalogField::BumpDensity,
        }
    }

    /// Form type of the field.
    pub fn space(&self) -> Space {
        match self {
            CatalogField::BumpScalar => Space::G,
            CatalogField::BumpGrad | CatalogField::BumpVector => Space::C,
            CatalogField::BumpCurl | CatalogField::BumpFlux => Space::D,
            CatalogField::BumpDiv | CatalogField::BumpDensity => Space::O,
            CatalogField::Zero(s) => *s,
        }
    }

    /// Exterior derivative of the field, itself in the catalog.
    pub fn derivative(&self) -> Option<Self> {
        match self {
            CatalogField::BumpScalar => Some(CatalogField::BumpGrad),
            CatalogField::BumpVector => Some(CatalogField::BumpCurl),
            CatalogField::BumpFlux => Some(CatalogField::BumpDiv),
            CatalogField::BumpGrad => Some(CatalogField::Zero(Space::D)),
            CatalogField::BumpCurl => Some(CatalogField::Zero(Space::O)),
            CatalogField::Zero(s) => s.next().map(CatalogField::Zero),
            _ => None,
        }
    }

    pub fn break_planes(&self) -> Vec<Plane3> {
        match self {
            CatalogField::Zero(_) => vec![],
            _ => vec![Plane3::axis_aligned(2, CUTOFF_Z)],
        }
    }

    pub fn eval(&self, p: Point3) -> Value {
        let (x, y, z) = (p.x, p.y, p.z);
        let (b, db) = bump(z);
        let v = Point3::new;
        match self {
            CatalogField::BumpScalar => Value::Scalar(b * (1.0 + x + 2.0 * y * y - x * y)),
            CatalogField::BumpGrad => {
                let q = 1.0 + x + 2.0 * y * y - x * y;
                Value::Vector(v(1.0 - y, 4.0 * y - x, 0.0) * b + v(0.0, 0.0, q * db))
            }
            CatalogField::BumpVector => Value::Vector(v(y * y, 1.0 + x * z, x - y) * b),
            CatalogField::BumpCurl => {
                let q = v(y * y, 1.0 + x * z, x - y);
                // b curl q + ∇b × q with ∇b = (0, 0, b')
                Value::Vector(v(-1.0 - x, -1.0, z - 2.0 * y) * b + v(0.0, 0.0, db).cross(q))
            }
            CatalogField::BumpFlux => Value::Vector(v(x * y, z * z - x, 1.0 + y) * b),
            CatalogField::BumpDiv => Value::Scalar(y * b + (1.0 + y) * db),
            CatalogField::BumpDensity => Value::Scalar(b * (1.0 + x * y + z)),
            CatalogField::Zero(s) => {
                if s.is_scalar() {
                    Value::Scalar(0.0)
                } else {
                    Value::Vector(Point3::zero())
                }
            }
        }
    }

    /// Run `f` with this field as an FE interpolation input.
    pub fn with_field<R>(&self, f: impl FnOnce(Field<'_>) -> R) -> R {
        if self.space().is_scalar() {
            let g = |p: Point3| self.eval(p).scalar();
            f(Field::Scalar(&g))
        } else {
            let g = |p: Point3| self.eval(p).vector();
            f(Field::Vector(&g))
        }
    }
}
