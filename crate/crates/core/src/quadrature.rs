//! Quadrature on straight triangles, triangles with one characteristic
//! edge, segments and characteristic arcs.
//!
//! Triangles use a collapsed (Duffy) tensor Gauss rule: the triangle is
//! swept by rays from an apex `C` to the opposite edge `γ(s)`, with
//! `x(s, r) = C + r (γ(s) - C)` and Jacobian `r · (γ(s) - C) × γ'(s)`. For a
//! straight opposite edge this is the standard collapsed rule; for a curved
//! one it is the transfinite map that blends the exact arc with the apex.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::geometry::{CharacteristicArc, Point};

/// Highest polynomial exactness served by the rules in this module.
pub const MAX_ORDER: usize = 60;

const MAX_POINTS: usize = 3 * MAX_ORDER / 2 + 8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn append(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// A facet rule together with the unit normal at each point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FacetRule {
    pub rule: QuadRule,
    pub normals: Vec<Point>,
}

impl FacetRule {
    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn tangent(&self, q: usize) -> Point {
        let n = self.normals[q];
        [-n[1], n[0]]
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]` with `n` points.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_POINTS)
            .map(|n| match NonZeroUsize::new(n) {
                None => (Vec::new(), Vec::new()),
                Some(nz) => {
                    let rule = GaussLegendre::new(nz);
                    let mut pairs: Vec<(f64, f64)> = rule
                        .into_node_weight_pairs()
                        .iter()
                        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
                        .collect();
                    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    pairs.into_iter().unzip()
                }
            })
            .collect()
    });
    &table[n]
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::Quadrature(format!(
            "unsupported order {order} (supported: 1..={MAX_ORDER})"
        )));
    }
    Ok(())
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Collapsed rule over the region swept from `apex` to the curve `edge`.
fn swept_rule(
    apex: Point,
    n_s: usize,
    n_r: usize,
    edge: impl Fn(f64) -> (Point, Point),
) -> Result<QuadRule> {
    let (sx, sw) = gauss_legendre(n_s);
    let (rx, rw) = gauss_legendre(n_r);
    let mut rule = QuadRule {
        points: Vec::with_capacity(n_s * n_r),
        weights: Vec::with_capacity(n_s * n_r),
    };
    for (&s, &ws) in sx.iter().zip(sw) {
        let (g, dg) = edge(s);
        let ray = sub(g, apex);
        let jac = cross(ray, dg);
        if !(jac > 0.0) {
            return Err(Error::Quadrature(format!(
                "non-positive Jacobian {jac:e} at edge parameter {s}"
            )));
        }
        for (&r, &wr) in rx.iter().zip(rw) {
            rule.points.push([apex[0] + r * ray[0], apex[1] + r * ray[1]]);
            rule.weights.push(ws * wr * r * jac);
        }
    }
    Ok(rule)
}

/// Rule exact for polynomials of total degree `<= order` on a straight
/// triangle given in counter-clockwise order.
pub fn triangle_rule(vertices: [Point; 3], order: usize) -> Result<QuadRule> {
    check_order(order)?;
    let [c, a, b] = vertices;
    let d = sub(b, a);
    swept_rule(c, order.div_ceil(2) + 1, (order + 2).div_ceil(2), |s| {
        ([a[0] + s * d[0], a[1] + s * d[1]], d)
    })
}

/// Rule on a triangle whose edge opposite `apex` is the characteristic arc
/// `arc`, traversed counter-clockwise with respect to the element.
///
/// Polynomial integrands of degree `order` become polynomials in the arc
/// parameter (the arc is polynomial in `w = sqrt(-y)`), so the rule is exact
/// for them.
pub fn curved_triangle_rule(apex: Point, arc: &CharacteristicArc, order: usize) -> Result<QuadRule> {
    check_order(order)?;
    swept_rule(apex, (3 * order + 5).div_ceil(2), (order + 2).div_ceil(2), |s| {
        (arc.point(s), arc.tangent(s))
    })
}

/// Gauss-Legendre rule on the segment `a`-`b`, exact to degree `order`.
pub fn segment_rule(a: Point, b: Point, order: usize) -> Result<QuadRule> {
    check_order(order)?;
    let (x, w) = gauss_legendre(order / 2 + 1);
    let len = sub(b, a)[0].hypot(sub(b, a)[1]);
    Ok(QuadRule {
        points: x
            .iter()
            .map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
            .collect(),
        weights: w.iter().map(|&wi| wi * len).collect(),
    })
}

/// Rule on a characteristic arc with arc-length weights. The integrand of
/// degree `order` is polynomial in the arc parameter; the arc-length factor
/// `2w sqrt(1 + w^2)` is smooth, and a few extra points resolve it to
/// round-off.
pub fn arc_rule(arc: &CharacteristicArc, order: usize) -> Result<QuadRule> {
    check_order(order)?;
    let (x, w) = gauss_legendre((3 * order + 3).div_ceil(2) + 4);
    let mut rule = QuadRule::default();
    for (&t, &wt) in x.iter().zip(w) {
        let tan = arc.tangent(t);
        rule.points.push(arc.point(t));
        rule.weights.push(wt * tan[0].hypot(tan[1]));
    }
    Ok(rule)
}
