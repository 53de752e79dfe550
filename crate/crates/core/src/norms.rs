//! Mesh-dependent norms and L² errors of broken functions.
//!
//! ```text
//! |v|_J²    = Σ_{F_I ∪ F_D} γ1/h_F³ ‖[v]‖² + Σ_{F_I} γ2 p²/h_F (‖[v_x]‖² + ‖[v_y]‖²) + Σ_{F_D} γ3 p²/h_F ‖v_t‖²
//! |||v|||²  = δ Σ_T ‖∇v‖² + |v|_J²
//! |||v|||_L² = Σ_T ‖Lv‖² + |v|_J²
//! ```
//!
//! For an error `u - u_h` the Dirichlet traces are `g - u_h` because the
//! exact solution carries the boundary data.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{Discretization, Penalties, SolutionField};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{Adjacency, FacetClass};
use crate::problem::ExactSolution;
use crate::quadrature::{triangle_rule, QuadRule};
use crate::spaces::BasisTable;

/// A function defined elementwise, possibly double-valued on facets.
pub trait BrokenFunction: Sync {
    /// Values and derivatives on element `e` as a one-function table.
    fn eval(&self, e: usize, points: &[Point]) -> BasisTable;
}

impl BrokenFunction for SolutionField<'_> {
    fn eval(&self, e: usize, points: &[Point]) -> BasisTable {
        SolutionField::eval(self, e, points)
    }
}

/// A smooth function restricted to the elements.
pub struct Exact<'a>(pub &'a dyn ExactSolution);

impl BrokenFunction for Exact<'_> {
    fn eval(&self, _: usize, points: &[Point]) -> BasisTable {
        let mut t = BasisTable::zeros(points.len(), 1);
        for (q, &p) in points.iter().enumerate() {
            let d = self.0.derivatives(p);
            t.v[q] = d[0];
            t.dx[q] = d[1];
            t.dy[q] = d[2];
            t.dxx[q] = d[3];
            t.dxy[q] = d[4];
            t.dyy[q] = d[5];
        }
        t
    }
}

/// `a - b`.
pub struct Difference<'a>(pub &'a dyn BrokenFunction, pub &'a dyn BrokenFunction);

impl BrokenFunction for Difference<'_> {
    fn eval(&self, e: usize, points: &[Point]) -> BasisTable {
        let (a, b) = (self.0.eval(e, points), self.1.eval(e, points));
        let sub = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect();
        BasisTable {
            n_funcs: 1,
            n_points: a.n_points,
            v: sub(&a.v, &b.v),
            dx: sub(&a.dx, &b.dx),
            dy: sub(&a.dy, &b.dy),
            dxx: sub(&a.dxx, &b.dxx),
            dxy: sub(&a.dxy, &b.dxy),
            dyy: sub(&a.dyy, &b.dyy),
        }
    }
}

/// Unweighted sums making up the norms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormParts {
    /// `Σ_T ‖∇v‖²`
    pub gradient: f64,
    /// `Σ_T ‖Lv‖²`
    pub operator: f64,
    /// `Σ h_F^{-3} ‖[v]‖²` over `F_I ∪ F_D`
    pub value_jump: f64,
    /// `Σ p² h_F^{-1} (‖[v_x]‖² + ‖[v_y]‖²)` over `F_I`
    pub gradient_jump: f64,
    /// `Σ p² h_F^{-1} ‖v_t‖²` over `F_D`
    pub tangential: f64,
}

impl NormParts {
    pub fn jump_sq(&self, pen: &Penalties) -> f64 {
        pen.gamma1 * self.value_jump + pen.gamma2 * self.gradient_jump + pen.gamma3 * self.tangential
    }

    pub fn energy(&self, delta: f64, pen: &Penalties) -> f64 {
        (delta * self.gradient + self.jump_sq(pen)).sqrt()
    }

    pub fn residual(&self, pen: &Penalties) -> f64 {
        (self.operator + self.jump_sq(pen)).sqrt()
    }

    pub fn jump(&self, pen: &Penalties) -> f64 {
        self.jump_sq(pen).sqrt()
    }
}

/// Quadrature order used for norms: the assembly order plus a margin for
/// non-polynomial reference solutions.
pub fn norm_order(d: &Discretization) -> usize {
    d.quad_order + 4
}

pub fn norm_parts(d: &Discretization, v: &dyn BrokenFunction) -> Result<NormParts> {
    let order = norm_order(d);
    let vol: Vec<(f64, f64)> = (0..d.mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let rule = d.mesh.element_rule(e, order)?;
            let t = v.eval(e, &rule.points);
            let mut g = 0.0;
            let mut l = 0.0;
            for (q, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                g += w * (t.dx[q] * t.dx[q] + t.dy[q] * t.dy[q]);
                let lv = x[1] * t.dxx[q] + t.dyy[q];
                l += w * lv * lv;
            }
            Ok((g, l))
        })
        .collect::<Result<_>>()?;
    let p2 = (d.degree() * d.degree()) as f64;
    let fac: Vec<[f64; 3]> = (0..d.mesh.facets().len())
        .into_par_iter()
        .map(|f| {
            let facet = &d.mesh.facets()[f];
            let mut out = [0.0; 3];
            let interior = facet.class == FacetClass::Interior;
            if !interior && !facet.is_dirichlet() {
                return Ok(out);
            }
            let rule = d.mesh.facet_rule(f, order)?;
            let pts = &rule.rule.points;
            let h = facet.h;
            let (a, b) = match facet.adjacency {
                Adjacency::Interior { plus, minus } => (v.eval(plus, pts), Some(v.eval(minus, pts))),
                Adjacency::Boundary { element } => (v.eval(element, pts), None),
            };
            for (q, &w) in rule.rule.weights.iter().enumerate() {
                match &b {
                    Some(b) => {
                        let jv = a.v[q] - b.v[q];
                        let jx = a.dx[q] - b.dx[q];
                        let jy = a.dy[q] - b.dy[q];
                        out[0] += w * jv * jv / (h * h * h);
                        out[1] += w * p2 / h * (jx * jx + jy * jy);
                    }
                    None => {
                        let n = rule.normals[q];
                        let vt = -a.dx[q] * n[1] + a.dy[q] * n[0];
                        out[0] += w * a.v[q] * a.v[q] / (h * h * h);
                        out[2] += w * p2 / h * vt * vt;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut parts = NormParts::default();
    for (g, l) in vol {
        parts.gradient += g;
        parts.operator += l;
    }
    for [a, b, c] in fac {
        parts.value_jump += a;
        parts.gradient_jump += b;
        parts.tangential += c;
    }
    Ok(parts)
}

pub fn energy_norm(d: &Discretization, v: &dyn BrokenFunction, pen: &Penalties) -> Result<f64> {
    Ok(norm_parts(d, v)?.energy(d.morawetz.delta, pen))
}

pub fn jump_seminorm(d: &Discretization, v: &dyn BrokenFunction, pen: &Penalties) -> Result<f64> {
    Ok(norm_parts(d, v)?.jump(pen))
}

pub fn residual_norm(d: &Discretization, v: &dyn BrokenFunction, pen: &Penalties) -> Result<f64> {
    Ok(norm_parts(d, v)?.residual(pen))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    All,
    /// `y > 0`
    Elliptic,
    /// `y < 0`
    Hyperbolic,
}

/// Clips a straight triangle to `y >= 0` (`upper`) or `y <= 0`, returning
/// a fan triangulation of the piece.
fn clip(tri: [Point; 3], upper: bool) -> Vec<[Point; 3]> {
    let inside = |p: &Point| if upper { p[1] >= 0.0 } else { p[1] <= 0.0 };
    let mut poly: Vec<Point> = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        if inside(&a) {
            poly.push(a);
        }
        if (a[1] > 0.0 && b[1] < 0.0) || (a[1] < 0.0 && b[1] > 0.0) {
            let t = a[1] / (a[1] - b[1]);
            poly.push([a[0] + t * (b[0] - a[0]), 0.0]);
        }
    }
    (1..poly.len().saturating_sub(1)).map(|i| [poly[0], poly[i], poly[i + 1]]).collect()
}

fn region_rules(d: &Discretization, e: usize, region: Region, order: usize) -> Result<Vec<QuadRule>> {
    let vs = d.mesh.element_vertices(e);
    let ymin = vs.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let ymax = vs.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let whole = || d.mesh.element_rule(e, order).map(|r| vec![r]);
    match region {
        Region::All => whole(),
        Region::Elliptic if ymin >= 0.0 => whole(),
        Region::Hyperbolic if ymax <= 0.0 => whole(),
        Region::Elliptic if ymax <= 0.0 => Ok(vec![]),
        Region::Hyperbolic if ymin >= 0.0 => Ok(vec![]),
        _ => {
            if d.mesh.curved_edge(e).is_some() {
                return Err(Error::Mesh(format!("curved element {e} straddles the parabolic line")));
            }
            clip(vs, region == Region::Elliptic)
                .into_iter()
                .filter(|t| crate::mesh::quality::triangle_quality(*t).is_some())
                .map(|t| triangle_rule(t, order))
                .collect()
        }
    }
}

/// `‖v‖_{L²}` over the region; elements cut by `y = 0` are split exactly.
pub fn l2_norm(d: &Discretization, v: &dyn BrokenFunction, region: Region) -> Result<f64> {
    let order = norm_order(d);
    let parts: Vec<f64> = (0..d.mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut s = 0.0;
            for rule in region_rules(d, e, region, order)? {
                let t = v.eval(e, &rule.points);
                s += rule.weights.iter().zip(&t.v).map(|(w, x)| w * x * x).sum::<f64>();
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// `‖u - u_h‖_{L²}` over the region.
pub fn l2_error(d: &Discretization, field: &SolutionField, u: &dyn ExactSolution, region: Region) -> Result<f64> {
    let ex = Exact(u);
    l2_norm(d, &Difference(&ex, field), region)
}

/// `‖u - u_h‖_{L²(Ω)}` for many coefficient vectors on one
/// discretization: basis and reference values are tabulated once.
pub struct L2ErrorEvaluator {
    offsets: Vec<usize>,
    /// Per element: weights, basis values (point-major, particular last)
    /// and `u - u_f` at the points.
    tables: Vec<(Vec<f64>, BasisTable, Vec<f64>)>,
}

impl L2ErrorEvaluator {
    pub fn new(d: &Discretization, u: &dyn ExactSolution) -> Result<Self> {
        let order = norm_order(d);
        let tables = (0..d.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let rule = d.mesh.element_rule(e, order)?;
                let basis = &d.spaces[e];
                let tab = basis.evaluate(&rule.points, true);
                let n = basis.dim();
                let target = (0..rule.len())
                    .map(|q| {
                        let uf = if tab.n_funcs > n { tab.v[tab.at(q, n)] } else { 0.0 };
                        u.value(rule.points[q]) - uf
                    })
                    .collect();
                Ok((rule.weights, tab, target))
            })
            .collect::<Result<_>>()?;
        Ok(Self { offsets: d.offsets.clone(), tables })
    }

    pub fn error(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (e, (w, tab, target)) in self.tables.iter().enumerate() {
            let c = &x[self.offsets[e]..self.offsets[e + 1]];
            for (q, (wq, t)) in w.iter().zip(target).enumerate() {
                let v: f64 = c.iter().enumerate().map(|(i, ci)| ci * tab.v[tab.at(q, i)]).sum();
                total += wq * (t - v) * (t - v);
            }
        }
        total.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub energy: f64,
    pub jump_seminorm: f64,
    pub residual_norm: f64,
    pub l2_total: f64,
    pub l2_elliptic: f64,
    pub l2_hyperbolic: f64,
    pub n_dofs: usize,
}

/// All norms of `u - u_h`.
pub fn error_report(d: &Discretization, field: &SolutionField, u: &dyn ExactSolution, pen: &Penalties) -> Result<ErrorReport> {
    let ex = Exact(u);
    let diff = Difference(&ex, field);
    let parts = norm_parts(d, &diff)?;
    Ok(ErrorReport {
        energy: parts.energy(d.morawetz.delta, pen),
        jump_seminorm: parts.jump(pen),
        residual_norm: parts.residual(pen),
        l2_total: l2_norm(d, &diff, Region::All)?,
        l2_elliptic: l2_norm(d, &diff, Region::Elliptic)?,
        l2_hyperbolic: l2_norm(d, &diff, Region::Hyperbolic)?,
        n_dofs: d.n_dofs(),
    })
}

/// Elementwise L² projection of `u` onto the (affine) local spaces: the
/// particular solution is kept and `u - u_f` is projected onto the span.
pub fn l2_projection(d: &Discretization, u: &dyn ExactSolution) -> Result<Vec<f64>> {
    let order = norm_order(d);
    let blocks: Vec<Vec<f64>> = (0..d.mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let rule = d.mesh.element_rule(e, order)?;
            let basis = &d.spaces[e];
            let tab = basis.evaluate(&rule.points, true);
            let n = basis.dim();
            let nq = rule.len();
            let a = DMatrix::from_fn(nq, n, |q, i| rule.weights[q].sqrt() * tab.v[tab.at(q, i)]);
            let b = DVector::from_fn(nq, |q, _| {
                let mut r = u.value(rule.points[q]);
                if tab.n_funcs > n {
                    r -= tab.v[tab.at(q, n)];
                }
                rule.weights[q].sqrt() * r
            });
            let c = a
                .svd(true, true)
                .solve(&b, 1e-14)
                .map_err(|m| Error::Space(format!("projection on element {e}: {m}")))?;
            Ok(c.iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    Ok(blocks.concat())
}
