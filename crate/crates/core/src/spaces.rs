//! Local polynomial spaces.
//!
//! Every basis function is stored by its coefficients over the shifted and
//! scaled monomials `ξ^j η^k`, `ξ = (x - x_T)/h_T`, `η = (y - y_T)/h_T`,
//! `j + k <= p`, in graded order. Three spaces are available:
//!
//! * standard: all of `P^p`;
//! * quasi-Trefftz: `v ∈ P^p` with `D^i(Lv)(x_T) = 0` for `|i| <= p - 2`;
//! * embedded Trefftz: `v ∈ P^p` with `Π^{p-2}(Lv) = 0` (elementwise `L²`
//!   projection), extracted from an SVD.
//!
//! Trefftz spaces carry a particular solution `u_f` for a nonzero source.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::problem::ProblemData;
use crate::quadrature::QuadRule;
use crate::taylor::{monomial_count, monomial_exponents, monomial_index, Jet};

/// Relative singular value threshold separating kernel from co-kernel.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Standard,
    QuasiTrefftz,
    EmbeddedTrefftz,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Standard => "standard",
            SpaceKind::QuasiTrefftz => "qt",
            SpaceKind::EmbeddedTrefftz => "et",
        }
    }

    pub fn is_trefftz(self) -> bool {
        self != SpaceKind::Standard
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "p" => Ok(SpaceKind::Standard),
            "qt" | "quasi-trefftz" => Ok(SpaceKind::QuasiTrefftz),
            "et" | "embedded-trefftz" => Ok(SpaceKind::EmbeddedTrefftz),
            _ => Err(Error::Config(format!("unknown space `{s}` (standard, qt, et)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub degree: usize,
    pub orthonormalize: bool,
}

impl SpaceConfig {
    /// Orthonormalization is switched on for `p >= 5`.
    pub fn new(kind: SpaceKind, degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Space(format!("degree {degree} < 2")));
        }
        Ok(Self { kind, degree, orthonormalize: degree >= 5 })
    }

    pub fn local_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Standard => monomial_count(self.degree),
            _ => 2 * self.degree + 1,
        }
    }
}

/// Values and derivatives of a set of functions at a set of points, stored
/// point-major: entry `(q, i)` at `q * n_funcs + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisTable {
    pub n_funcs: usize,
    pub n_points: usize,
    pub v: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dxy: Vec<f64>,
    pub dyy: Vec<f64>,
}

impl BasisTable {
    pub fn zeros(n_points: usize, n_funcs: usize) -> Self {
        let z = vec![0.0; n_points * n_funcs];
        Self {
            n_funcs,
            n_points,
            v: z.clone(),
            dx: z.clone(),
            dy: z.clone(),
            dxx: z.clone(),
            dxy: z.clone(),
            dyy: z,
        }
    }

    #[inline]
    pub fn at(&self, q: usize, i: usize) -> usize {
        q * self.n_funcs + i
    }

    /// Linear combination `Σ_i c_i φ_i` as a one-function table.
    pub fn combine(&self, c: &[f64]) -> BasisTable {
        assert_eq!(c.len(), self.n_funcs);
        let mut out = BasisTable::zeros(self.n_points, 1);
        for q in 0..self.n_points {
            for (i, &ci) in c.iter().enumerate() {
                let k = self.at(q, i);
                out.v[q] += ci * self.v[k];
                out.dx[q] += ci * self.dx[k];
                out.dy[q] += ci * self.dy[k];
                out.dxx[q] += ci * self.dxx[k];
                out.dxy[q] += ci * self.dxy[k];
                out.dyy[q] += ci * self.dyy[k];
            }
        }
        out
    }
}

/// Scaled monomials of degree `<= degree` about `center` with derivatives.
pub fn monomial_table(center: Point, scale: f64, degree: usize, points: &[Point]) -> BasisTable {
    let exps = monomial_exponents(degree);
    let mut t = BasisTable::zeros(points.len(), exps.len());
    let (h1, h2) = (1.0 / scale, 1.0 / (scale * scale));
    let mut xi_pow = vec![0.0; degree + 1];
    let mut eta_pow = vec![0.0; degree + 1];
    for (q, p) in points.iter().enumerate() {
        let xi = (p[0] - center[0]) * h1;
        let eta = (p[1] - center[1]) * h1;
        xi_pow[0] = 1.0;
        eta_pow[0] = 1.0;
        for a in 1..=degree {
            xi_pow[a] = xi_pow[a - 1] * xi;
            eta_pow[a] = eta_pow[a - 1] * eta;
        }
        let xp = |a: isize| if a < 0 { 0.0 } else { xi_pow[a as usize] };
        let yp = |b: isize| if b < 0 { 0.0 } else { eta_pow[b as usize] };
        for (i, &(j, k)) in exps.iter().enumerate() {
            let (ji, ki) = (j as isize, k as isize);
            let (jf, kf) = (j as f64, k as f64);
            let idx = t.at(q, i);
            t.v[idx] = xp(ji) * yp(ki);
            t.dx[idx] = jf * xp(ji - 1) * yp(ki) * h1;
            t.dy[idx] = kf * xp(ji) * yp(ki - 1) * h1;
            t.dxx[idx] = jf * (jf - 1.0) * xp(ji - 2) * yp(ki) * h2;
            t.dxy[idx] = jf * kf * xp(ji - 1) * yp(ki - 1) * h2;
            t.dyy[idx] = kf * (kf - 1.0) * xp(ji) * yp(ki - 2) * h2;
        }
    }
    t
}

/// Applies a coefficient matrix (functions by monomials) to a monomial table.
fn apply_coeffs(mono: &BasisTable, coeffs: &DMatrix<f64>, extra: Option<&DVector<f64>>) -> BasisTable {
    let nb = coeffs.nrows();
    let nf = nb + extra.is_some() as usize;
    let nm = coeffs.ncols();
    let mut t = BasisTable::zeros(mono.n_points, nf);
    for q in 0..mono.n_points {
        for i in 0..nf {
            let row = |m: usize| if i < nb { coeffs[(i, m)] } else { extra.unwrap()[m] };
            let mut acc = [0.0; 6];
            for m in 0..nm {
                let c = row(m);
                if c == 0.0 {
                    continue;
                }
                let k = mono.at(q, m);
                acc[0] += c * mono.v[k];
                acc[1] += c * mono.dx[k];
                acc[2] += c * mono.dy[k];
                acc[3] += c * mono.dxx[k];
                acc[4] += c * mono.dxy[k];
                acc[5] += c * mono.dyy[k];
            }
            let k = t.at(q, i);
            t.v[k] = acc[0];
            t.dx[k] = acc[1];
            t.dy[k] = acc[2];
            t.dxx[k] = acc[3];
            t.dxy[k] = acc[4];
            t.dyy[k] = acc[5];
        }
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
    /// One row per basis function, one column per scaled monomial.
    pub coeffs: DMatrix<f64>,
    pub particular: Option<DVector<f64>>,
}

impl ElementBasis {
    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Basis functions at `points`; with `with_particular` the particular
    /// solution (if any) is appended as an extra last column.
    pub fn evaluate(&self, points: &[Point], with_particular: bool) -> BasisTable {
        let mono = monomial_table(self.center, self.scale, self.degree, points);
        let extra = if with_particular { self.particular.as_ref() } else { None };
        apply_coeffs(&mono, &self.coeffs, extra)
    }

    pub fn has_particular(&self) -> bool {
        self.particular.is_some()
    }
}

/// `L²`-orthonormalizes the functions given by `coeffs` on `rule` through a
/// Householder QR of the weighted value matrix: with `√w Φ = Q R` the new
/// coefficients are `R^{-T} A`.
pub fn orthonormalize(
    coeffs: &DMatrix<f64>,
    center: Point,
    scale: f64,
    degree: usize,
    rule: &QuadRule,
) -> Result<DMatrix<f64>> {
    let nb = coeffs.nrows();
    if rule.len() < nb {
        return Err(Error::Space(format!(
            "{} quadrature points cannot orthonormalize {nb} functions",
            rule.len()
        )));
    }
    let mono = monomial_table(center, scale, degree, &rule.points);
    let t = apply_coeffs(&mono, coeffs, None);
    let mut vals = DMatrix::zeros(rule.len(), nb);
    for q in 0..rule.len() {
        let sw = rule.weights[q].sqrt();
        for i in 0..nb {
            vals[(q, i)] = sw * t.v[t.at(q, i)];
        }
    }
    let r = vals.qr().r();
    let rmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-13 * rmax) {
        return Err(Error::Space("basis is numerically rank deficient".into()));
    }
    // R^T X = A, solved column by column by forward substitution
    let rt = r.transpose();
    let x = rt
        .solve_lower_triangular(coeffs)
        .ok_or_else(|| Error::Space("singular orthonormalization factor".into()))?;
    Ok(x)
}

/// Runs the Taylor-coefficient recursion of `L v = f` in scaled monomials.
/// `a` holds the seeds `a_{j,0}`, `a_{j,1}` on entry; `rhs(j, k)` is the
/// Taylor coefficient of `f` of `dx^j dy^k` at the center.
fn qt_recursion(a: &mut [f64], center: Point, scale: f64, p: usize, rhs: impl Fn(usize, usize) -> f64) {
    let (y0, h) = (center[1], scale);
    for n in 2..=p {
        for m in 2..=n {
            let (j, k) = (n - m, m - 2);
            let jj = ((j + 2) * (j + 1)) as f64;
            let mut s = h.powi((2 + j + k) as i32) * rhs(j, k) - y0 * jj * a[monomial_index(j + 2, k)];
            if k >= 1 {
                s -= h * jj * a[monomial_index(j + 2, k - 1)];
            }
            a[monomial_index(j, m)] = s / ((m * (m - 1)) as f64);
        }
    }
}

/// Homogeneous quasi-Trefftz basis: each of the `2p + 1` free coefficients
/// `a_{j,0}`, `a_{j,1}` is seeded with a unit value.
pub fn qt_basis(center: Point, scale: f64, p: usize) -> DMatrix<f64> {
    let nm = monomial_count(p);
    let seeds: Vec<usize> = (0..=p)
        .map(|j| monomial_index(j, 0))
        .chain((0..p).map(|j| monomial_index(j, 1)))
        .collect();
    let mut out = DMatrix::zeros(seeds.len(), nm);
    for (row, &s) in seeds.iter().enumerate() {
        let mut a = vec![0.0; nm];
        a[s] = 1.0;
        qt_recursion(&mut a, center, scale, p, |_, _| 0.0);
        for m in 0..nm {
            out[(row, m)] = a[m];
        }
    }
    out
}

/// Particular quasi-Trefftz solution with zero seeds; `f` is a jet of the
/// source at `center` of order at least `p - 2`.
pub fn qt_particular(center: Point, scale: f64, p: usize, f: &Jet) -> DVector<f64> {
    let mut a = vec![0.0; monomial_count(p)];
    qt_recursion(&mut a, center, scale, p, |j, k| f.coeff(j, k));
    DVector::from_vec(a)
}

/// Embedded Trefftz basis and particular solution on one element.
pub fn et_basis(
    element: usize,
    center: Point,
    scale: f64,
    p: usize,
    rule: &QuadRule,
    data: Option<&dyn ProblemData>,
) -> Result<ElementBasis> {
    let nm = monomial_count(p);
    let phi = orthonormalize(&DMatrix::identity(nm, nm), center, scale, p, rule)?;
    let npsi = monomial_count(p - 2);
    let psi_low = orthonormalize(&DMatrix::identity(npsi, npsi), center, scale, p - 2, rule)?;

    let tphi = apply_coeffs(&monomial_table(center, scale, p, &rule.points), &phi, None);
    let tpsi = apply_coeffs(&monomial_table(center, scale, p - 2, &rule.points), &psi_low, None);
    let mut b = DMatrix::zeros(nm, nm);
    let mut moments = DVector::zeros(nm);
    for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let fq = data.map_or(0.0, |d| d.source(x));
        for a in 0..npsi {
            let wpsi = w * tpsi.v[tpsi.at(q, a)];
            moments[a] += wpsi * fq;
            for i in 0..nm {
                let k = tphi.at(q, i);
                b[(a, i)] += wpsi * (x[1] * tphi.dxx[k] + tphi.dyy[k]);
            }
        }
    }
    let svd = b.svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let smax = svd.singular_values.max();
    let tol = RANK_TOL * smax;
    let kernel: Vec<usize> = (0..nm).filter(|&i| svd.singular_values[i] < tol).collect();
    if kernel.len() != 2 * p + 1 {
        return Err(Error::Rank { element, expected: 2 * p + 1, found: kernel.len() });
    }
    let mut coeffs = DMatrix::zeros(kernel.len(), nm);
    for (row, &i) in kernel.iter().enumerate() {
        coeffs.row_mut(row).copy_from(&(vt.row(i) * &phi));
    }
    let particular = data.map(|_| {
        let mut x = DVector::zeros(nm);
        for i in (0..nm).filter(|&i| svd.singular_values[i] >= tol) {
            let c = u.column(i).dot(&moments) / svd.singular_values[i];
            x += vt.row(i).transpose() * c;
        }
        (x.transpose() * &phi).transpose()
    });
    Ok(ElementBasis { center, scale, degree: p, coeffs, particular })
}

/// Builds the local basis of element `e`. `quad_order` is the volume
/// quadrature order used for orthonormalization and projections.
pub fn element_basis(
    mesh: &Mesh,
    e: usize,
    config: &SpaceConfig,
    data: Option<&dyn ProblemData>,
    quad_order: usize,
) -> Result<ElementBasis> {
    let p = config.degree;
    let center = mesh.centroid(e);
    let scale = mesh.h_element(e);
    let nm = monomial_count(p);
    let needs_rule = config.orthonormalize || config.kind == SpaceKind::EmbeddedTrefftz;
    let rule = if needs_rule { mesh.element_rule(e, quad_order)? } else { QuadRule::default() };
    let mut basis = match config.kind {
        SpaceKind::Standard => ElementBasis {
            center,
            scale,
            degree: p,
            coeffs: DMatrix::identity(nm, nm),
            particular: None,
        },
        SpaceKind::QuasiTrefftz => ElementBasis {
            center,
            scale,
            degree: p,
            coeffs: qt_basis(center, scale, p),
            particular: data.map(|d| qt_particular(center, scale, p, &d.source_jet(center, p - 2))),
        },
        SpaceKind::EmbeddedTrefftz => et_basis(e, center, scale, p, &rule, data)?,
    };
    if config.orthonormalize && config.kind != SpaceKind::EmbeddedTrefftz {
        basis.coeffs = orthonormalize(&basis.coeffs, center, scale, p, &rule)?;
    }
    Ok(basis)
}

/// Local bases of all elements, built in parallel.
pub fn build_spaces(
    mesh: &Mesh,
    config: &SpaceConfig,
    data: Option<&dyn ProblemData>,
    quad_order: usize,
) -> Result<Vec<ElementBasis>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| element_basis(mesh, e, config, data, quad_order))
        .collect()
}
