//! Exact geometry of the mixed elliptic-hyperbolic domain.
//!
//! The domain is bounded above by the roof `y = d - d|x|` (elliptic
//! boundary Γ0) and below by the two characteristics of the Tricomi
//! operator through `(-1, 0)` (Γ1) and `(1, 0)` (Γ2), which meet at
//! `(0, y_c)`.
//!
//! Characteristic arcs are parametrized internally by `w = sqrt(-y)`, in
//! which both coordinates are polynomials (`x = ∓(1 - 2w³/3)`, `y = -w²`).
//! This removes the square-root singularity of `dx/dy` at the parabolic
//! line from every quadrature integrand.

use crate::error::{Error, Result};

/// Absolute tolerance for boundary membership tests.
pub const BOUNDARY_TOL: f64 = 1e-10;

pub type Point = [f64; 2];

/// The type-changing coefficient `K(y)` of `L u = K u_xx + u_yy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    /// `K(y) = y`.
    Tricomi,
}

impl Coefficient {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Coefficient::Tricomi => y,
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            Coefficient::Tricomi => {
                let _ = y;
                1.0
            }
        }
    }

    /// `∫_y^0 sqrt(-K(t)) dt` for `y <= 0`.
    pub fn characteristic_integral(&self, y: f64) -> f64 {
        match self {
            Coefficient::Tricomi => 2.0 / 3.0 * (-y).max(0.0).powf(1.5),
        }
    }

    /// Ordinate where the two characteristics through `(∓1, 0)` meet, i.e.
    /// the solution of `∫_y^0 sqrt(-K) = 1`.
    pub fn characteristic_meeting_point(&self) -> f64 {
        match self {
            Coefficient::Tricomi => -(1.5f64).powf(2.0 / 3.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundarySide {
    /// Elliptic roof, Dirichlet data.
    Gamma0,
    /// Characteristic through `(-1, 0)`, Dirichlet data.
    Gamma1,
    /// Characteristic through `(1, 0)`, no data.
    Gamma2,
}

impl BoundarySide {
    pub fn is_characteristic(self) -> bool {
        matches!(self, BoundarySide::Gamma1 | BoundarySide::Gamma2)
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundarySide::Gamma0 | BoundarySide::Gamma1)
    }

    pub fn tag(self) -> &'static str {
        match self {
            BoundarySide::Gamma0 => "gamma0",
            BoundarySide::Gamma1 => "gamma1",
            BoundarySide::Gamma2 => "gamma2",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "gamma0" => Some(BoundarySide::Gamma0),
            "gamma1" => Some(BoundarySide::Gamma1),
            "gamma2" => Some(BoundarySide::Gamma2),
            _ => None,
        }
    }

    /// Sign of `x` on the characteristic near the parabolic line.
    fn characteristic_sign(self) -> f64 {
        match self {
            BoundarySide::Gamma1 => -1.0,
            _ => 1.0,
        }
    }
}

/// Geometry of the Tricomi domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub coefficient: Coefficient,
    /// Roof height.
    pub d: f64,
    y_c: f64,
}

impl DomainSpec {
    pub fn tricomi(d: f64) -> Result<Self> {
        let limit = (2.0f64 / 3.0).powf(1.0 / 3.0);
        if !(d > 0.0 && d < limit) {
            return Err(Error::Domain(format!(
                "roof height d = {d} must lie in (0, {limit:.6})"
            )));
        }
        let coefficient = Coefficient::Tricomi;
        Ok(Self {
            coefficient,
            d,
            y_c: coefficient.characteristic_meeting_point(),
        })
    }

    /// Ordinate of the point where Γ1 and Γ2 meet.
    pub fn y_c(&self) -> f64 {
        self.y_c
    }

    pub fn k(&self, y: f64) -> f64 {
        self.coefficient.value(y)
    }

    /// x-coordinate of the characteristic `side` at height `y`.
    pub fn characteristic_x(&self, side: BoundarySide, y: f64) -> Result<f64> {
        if !side.is_characteristic() {
            return Err(Error::Domain(format!("{side:?} is not a characteristic")));
        }
        if !(y >= self.y_c - BOUNDARY_TOL && y <= BOUNDARY_TOL) {
            return Err(Error::Domain(format!(
                "y = {y} outside the characteristic range [{}, 0]",
                self.y_c
            )));
        }
        let s = side.characteristic_sign();
        Ok(s * (1.0 - self.coefficient.characteristic_integral(y.min(0.0))))
    }

    /// Height of the elliptic roof at abscissa `x`.
    pub fn elliptic_boundary_y(&self, x: f64) -> Result<f64> {
        elliptic_boundary_y(x, self.d)
    }

    /// Whether `p` lies on the named boundary piece within [`BOUNDARY_TOL`].
    pub fn on_boundary(&self, side: BoundarySide, p: Point) -> bool {
        let [x, y] = p;
        match side {
            BoundarySide::Gamma0 => {
                x.abs() <= 1.0 + BOUNDARY_TOL
                    && y >= -BOUNDARY_TOL
                    && (y - self.d * (1.0 - x.abs())).abs() <= BOUNDARY_TOL
            }
            BoundarySide::Gamma1 | BoundarySide::Gamma2 => {
                match self.characteristic_x(side, y) {
                    Ok(xc) => (x - xc).abs() <= BOUNDARY_TOL,
                    Err(_) => false,
                }
            }
        }
    }

    /// Unit outward normal at a point of the named boundary piece.
    pub fn boundary_normal(&self, side: BoundarySide, p: Point) -> Result<Point> {
        if !self.on_boundary(side, p) {
            return Err(Error::Geometry(format!(
                "point ({}, {}) is not on {side:?}",
                p[0], p[1]
            )));
        }
        match side {
            BoundarySide::Gamma0 => {
                let sx = if p[0] > 0.0 {
                    1.0
                } else if p[0] < 0.0 {
                    -1.0
                } else {
                    return Err(Error::Geometry(
                        "normal undefined at the apex of the roof".into(),
                    ));
                };
                let norm = (1.0 + self.d * self.d).sqrt();
                Ok([self.d * sx / norm, 1.0 / norm])
            }
            BoundarySide::Gamma1 | BoundarySide::Gamma2 => {
                let k = self.k(p[1].min(0.0));
                let norm = (1.0 - k).sqrt();
                Ok([side.characteristic_sign() / norm, -(-k).sqrt() / norm])
            }
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, p: Point) -> bool {
        let [x, y] = p;
        if x.abs() > 1.0 || y >= self.d * (1.0 - x.abs()) {
            return false;
        }
        let h = y.min(0.0);
        if h <= self.y_c {
            return false;
        }
        match (
            self.characteristic_x(BoundarySide::Gamma1, h),
            self.characteristic_x(BoundarySide::Gamma2, h),
        ) {
            (Ok(left), Ok(right)) => x > left && x < right,
            _ => false,
        }
    }

    /// Exact area of the domain.
    pub fn area(&self) -> f64 {
        let yc = -self.y_c;
        2.0 * yc - 8.0 / 15.0 * yc.powf(2.5) + self.d
    }

    /// Exact length of one characteristic arc, `∫ sqrt(1 - K) dy`.
    pub fn characteristic_length(&self) -> f64 {
        2.0 / 3.0 * ((1.0 - self.y_c).powf(1.5) - 1.0)
    }
}

/// Height of the roof `y = d - d|x|`.
pub fn elliptic_boundary_y(x: f64, d: f64) -> Result<f64> {
    if x.abs() > 1.0 {
        return Err(Error::Domain(format!("|x| = {} exceeds 1", x.abs())));
    }
    Ok(d - d * x.abs())
}

/// A piece of a characteristic curve, traversed from `w0` to `w1` where
/// `w = sqrt(-y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicArc {
    pub side: BoundarySide,
    pub w0: f64,
    pub w1: f64,
}

impl CharacteristicArc {
    /// Arc of `side` running from `a` to `b` (both assumed on the curve).
    pub fn between(side: BoundarySide, a: Point, b: Point) -> Self {
        debug_assert!(side.is_characteristic());
        Self {
            side,
            w0: (-a[1]).max(0.0).sqrt(),
            w1: (-b[1]).max(0.0).sqrt(),
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            side: self.side,
            w0: self.w1,
            w1: self.w0,
        }
    }

    fn point_at_w(&self, w: f64) -> Point {
        let s = self.side.characteristic_sign();
        [s * (1.0 - 2.0 / 3.0 * w * w * w), -w * w]
    }

    /// Point at arc parameter `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> Point {
        self.point_at_w(self.w0 + t * (self.w1 - self.w0))
    }

    /// Derivative of [`Self::point`] with respect to `t`.
    pub fn tangent(&self, t: f64) -> Point {
        let s = self.side.characteristic_sign();
        let dw = self.w1 - self.w0;
        let w = self.w0 + t * dw;
        [-2.0 * s * w * w * dw, -2.0 * w * dw]
    }

    pub fn start(&self) -> Point {
        self.point(0.0)
    }

    pub fn end(&self) -> Point {
        self.point(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec() -> DomainSpec {
        DomainSpec::tricomi(0.5).unwrap()
    }

    #[test]
    fn meeting_point_value() {
        assert!((spec().y_c() + 1.31037).abs() < 1e-4);
    }

    #[test]
    fn roof_height_limit_enforced() {
        assert!(DomainSpec::tricomi(0.9).is_err());
        assert!(DomainSpec::tricomi(0.0).is_err());
    }

    #[test]
    fn characteristic_examples() {
        let s = spec();
        assert_abs_diff_eq!(s.characteristic_x(BoundarySide::Gamma1, 0.0).unwrap(), -1.0);
        assert_abs_diff_eq!(s.characteristic_x(BoundarySide::Gamma2, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            s.characteristic_x(BoundarySide::Gamma1, -1.0).unwrap(),
            -1.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(s.characteristic_x(BoundarySide::Gamma1, -2.0).is_err());
        assert!(s.characteristic_x(BoundarySide::Gamma2, 0.1).is_err());
        let yc = s.y_c();
        let l = s.characteristic_x(BoundarySide::Gamma1, yc).unwrap();
        let r = s.characteristic_x(BoundarySide::Gamma2, yc).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn roof_examples() {
        assert_abs_diff_eq!(elliptic_boundary_y(0.0, 0.5).unwrap(), 0.5);
        assert_abs_diff_eq!(elliptic_boundary_y(1.0, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(elliptic_boundary_y(-0.5, 0.5).unwrap(), 0.25);
        assert!(elliptic_boundary_y(1.5, 0.5).is_err());
    }

    #[test]
    fn normal_examples() {
        let s = spec();
        let x = s.characteristic_x(BoundarySide::Gamma2, -1.0).unwrap();
        let n = s.boundary_normal(BoundarySide::Gamma2, [x, -1.0]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(n[0], r, epsilon = 1e-15);
        assert_abs_diff_eq!(n[1], -r, epsilon = 1e-15);

        let y = -1e-14;
        let x = s.characteristic_x(BoundarySide::Gamma2, y).unwrap();
        let n = s.boundary_normal(BoundarySide::Gamma2, [x, y]).unwrap();
        assert_abs_diff_eq!(n[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(n[1], 0.0, epsilon = 1e-6);

        let n = s.boundary_normal(BoundarySide::Gamma0, [0.5, 0.25]).unwrap();
        let norm = 1.25f64.sqrt();
        assert_abs_diff_eq!(n[0], 0.5 / norm, epsilon = 1e-15);
        assert_abs_diff_eq!(n[1], 1.0 / norm, epsilon = 1e-15);

        assert!(s.boundary_normal(BoundarySide::Gamma0, [0.5, 0.3]).is_err());
    }

    #[test]
    fn characteristic_relation_and_unit_length() {
        let s = spec();
        for i in 0..=200 {
            let y = s.y_c() * i as f64 / 200.0;
            for side in [BoundarySide::Gamma1, BoundarySide::Gamma2] {
                let x = s.characteristic_x(side, y).unwrap();
                let n = s.boundary_normal(side, [x, y]).unwrap();
                assert!((s.k(y) * n[0] * n[0] + n[1] * n[1]).abs() < 1e-12);
                assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn contains_examples() {
        let s = spec();
        assert!(s.contains([0.0, 0.25]));
        assert!(!s.contains([0.0, -2.0]));
        assert!(!s.contains([0.0, 0.6]));
        assert!(s.contains([0.0, -1.3]));
        assert!(!s.contains([0.9, -1.0]));
        assert!(!s.contains([1.0, 0.0]));
    }

    #[test]
    fn arc_parametrization_on_curve() {
        let s = spec();
        let a = [1.0, 0.0];
        let b = [0.0, s.y_c()];
        let arc = CharacteristicArc::between(BoundarySide::Gamma2, a, b);
        for i in 0..=10 {
            let p = arc.point(i as f64 / 10.0);
            assert!(s.on_boundary(BoundarySide::Gamma2, p));
        }
        assert_abs_diff_eq!(arc.end()[0], 0.0, epsilon = 1e-14);
        // tangent against a central difference
        let t = 0.37;
        let h = 1e-6;
        let (p, q) = (arc.point(t + h), arc.point(t - h));
        let tan = arc.tangent(t);
        assert_abs_diff_eq!(tan[0], (p[0] - q[0]) / (2.0 * h), epsilon = 1e-8);
        assert_abs_diff_eq!(tan[1], (p[1] - q[1]) / (2.0 * h), epsilon = 1e-8);
    }
}
