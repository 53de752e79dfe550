//! Assembly of the DG forms.
//!
//! With test function `v`, trial function `u`, `W = diag(K, 1)` and
//! `M v = b v_x + c v_y`:
//!
//! ```text
//! A_h(u, v) = -Σ_T ∫_T W∇u·∇(Mv) + Σ_{F_I} ∫_F {W∇u}·[Mv] + Σ_{F_D ∪ F_2} ∫_F (W∇u·n) Mv
//! A_J(u, v) = Σ_{F_I ∪ F_D} γ1/h_F³ ∫_F [u]·[v]
//!           + Σ_{F_I} γ2 p²/h_F ∫_F ([u_x]·[v_x] + [u_y]·[v_y])
//!           + Σ_{F_D} γ3 p²/h_F ∫_F u_t v_t
//! L_h(v)    = Σ_T ∫_T f Mv + Σ_{F_D} (γ1/h_F³ ∫_F g v + γ3 p²/h_F ∫_F g_t v_t)
//! ```
//!
//! plus, optionally, `γ4 ∫ Lu Lv` and `γ4 ∫ f Lv`. Each penalty term is
//! assembled with unit weight as a separate part so that the operator for
//! any penalty set is a linear combination of the parts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Adjacency, FacetClass, Mesh};
use crate::morawetz::Morawetz;
use crate::problem::{ProblemData, ZeroData};
use crate::solver::{LinearSystem, SparseMatrix};
use crate::spaces::{build_spaces, BasisTable, ElementBasis, SpaceConfig};

pub const CONSISTENCY: usize = 0;
pub const VALUE_JUMP: usize = 1;
pub const GRADIENT_JUMP: usize = 2;
pub const TANGENTIAL: usize = 3;
pub const LEAST_SQUARES: usize = 4;
pub const N_PARTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalties {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Weight of the least-squares term; zero disables it.
    pub gamma4: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Self { gamma1: 10.0, gamma2: 0.1, gamma3: 0.1, gamma4: 0.0 }
    }
}

impl Penalties {
    pub fn validate(&self) -> Result<()> {
        let Penalties { gamma1, gamma2, gamma3, gamma4 } = *self;
        if !(gamma1 > 0.0 && gamma2 > 0.0 && gamma3 > 0.0 && gamma4 >= 0.0)
            || ![gamma1, gamma2, gamma3, gamma4].iter().all(|g| g.is_finite())
        {
            return Err(Error::Config(format!(
                "penalties must satisfy γ1, γ2, γ3 > 0 and γ4 >= 0 (got {gamma1}, {gamma2}, {gamma3}, {gamma4})"
            )));
        }
        Ok(())
    }

    /// Weights of the parts `[consistency, value, gradient, tangential, LS]`.
    pub fn weights(&self) -> [f64; N_PARTS] {
        [1.0, self.gamma1, self.gamma2, self.gamma3, self.gamma4]
    }
}

/// Mesh, local spaces and multiplier of one discretization.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub config: SpaceConfig,
    pub morawetz: Morawetz,
    pub spaces: Vec<ElementBasis>,
    pub offsets: Vec<usize>,
    pub quad_order: usize,
}

impl Discretization {
    /// `data` supplies the source for Trefftz particular solutions; `None`
    /// builds homogeneous spaces. The default quadrature order is `2p + 3`.
    pub fn new(
        mesh: Mesh,
        config: SpaceConfig,
        morawetz: Morawetz,
        data: Option<&dyn ProblemData>,
        quad_order: Option<usize>,
    ) -> Result<Self> {
        let quad_order = quad_order.unwrap_or(2 * config.degree + 3);
        if quad_order < 2 * config.degree + 1 {
            return Err(Error::Config(format!(
                "quadrature order {quad_order} below 2p + 1 = {}",
                2 * config.degree + 1
            )));
        }
        let data = if config.kind.is_trefftz() { data } else { None };
        let spaces = build_spaces(&mesh, &config, data, quad_order)?;
        let mut offsets = Vec::with_capacity(spaces.len() + 1);
        let mut acc = 0;
        for s in &spaces {
            offsets.push(acc);
            acc += s.dim();
        }
        offsets.push(acc);
        Ok(Self { mesh, config, morawetz, spaces, offsets, quad_order })
    }

    pub fn n_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn degree(&self) -> usize {
        self.config.degree
    }

    /// Global indices of the block of element `e`.
    pub fn dofs(&self, e: usize) -> std::ops::Range<usize> {
        self.offsets[e]..self.offsets[e + 1]
    }
}

/// Dense local contributions on a set of global test/trial indices; trial
/// columns past `dofs.len()` belong to particular solutions.
#[derive(Clone, Debug)]
struct Local {
    dofs: Vec<usize>,
    width: usize,
    mats: [Vec<f64>; N_PARTS],
    rhs: [Vec<f64>; N_PARTS],
}

impl Local {
    fn new(dofs: Vec<usize>, n_extra: usize) -> Self {
        let n = dofs.len();
        let width = n + n_extra;
        Self {
            dofs,
            width,
            mats: std::array::from_fn(|_| vec![0.0; n * width]),
            rhs: std::array::from_fn(|_| vec![0.0; n]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Region {
    Volume,
    Interior,
    Boundary,
}

struct Scatter<'a> {
    weights: [f64; N_PARTS],
    regions: &'a [Region],
    data_rhs: bool,
    offsets: bool,
}

fn scatter(n: usize, locals: &[(Region, Local)], s: &Scatter) -> (SparseMatrix, Vec<f64>) {
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for (region, l) in locals {
        if !s.regions.contains(region) {
            continue;
        }
        let nl = l.dofs.len();
        // weighted sum of the parts, then one triplet per entry
        let mut m = vec![0.0; nl * l.width];
        let mut r = vec![0.0; nl];
        for (k, &w) in s.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (a, b) in m.iter_mut().zip(&l.mats[k]) {
                *a += w * b;
            }
            if s.data_rhs {
                for (a, b) in r.iter_mut().zip(&l.rhs[k]) {
                    *a += w * b;
                }
            }
        }
        for i in 0..nl {
            let row = &m[i * l.width..(i + 1) * l.width];
            for j in 0..nl {
                if row[j] != 0.0 {
                    triplets.push((l.dofs[i], l.dofs[j], row[j]));
                }
            }
            let mut ri = r[i];
            if s.offsets {
                ri -= row[nl..].iter().sum::<f64>();
            }
            rhs[l.dofs[i]] += ri;
        }
    }
    (SparseMatrix::from_triplets(n, n, triplets), rhs)
}

/// Per-point quantities of a test or trial function.
#[derive(Clone, Copy, Default)]
struct Trace {
    v: f64,
    dx: f64,
    dy: f64,
    mv: f64,
    /// `W∇v·n`
    flux: f64,
    /// `∇v·t`
    dt: f64,
    sign: f64,
}

fn traces(tab: &BasisTable, q: usize, sign: f64, bc: (f64, f64), k: f64, n: [f64; 2]) -> Vec<Trace> {
    (0..tab.n_funcs)
        .map(|i| {
            let a = tab.at(q, i);
            let (dx, dy) = (tab.dx[a], tab.dy[a]);
            Trace {
                v: tab.v[a],
                dx,
                dy,
                mv: bc.0 * dx + bc.1 * dy,
                flux: k * dx * n[0] + dy * n[1],
                dt: -dx * n[1] + dy * n[0],
                sign,
            }
        })
        .collect()
}

/// Splits the columns of per-side tables into basis columns (first, in
/// side order) and particular columns (after all basis columns).
fn column_order(sides: &[(&BasisTable, usize)]) -> Vec<(usize, usize)> {
    let mut cols = Vec::new();
    for (s, &(_, dim)) in sides.iter().enumerate() {
        cols.extend((0..dim).map(|i| (s, i)));
    }
    for (s, &(tab, dim)) in sides.iter().enumerate() {
        if tab.n_funcs > dim {
            cols.push((s, dim));
        }
    }
    cols
}

fn element_local(d: &Discretization, e: usize, data: &dyn ProblemData, least_squares: bool) -> Result<Local> {
    let rule = d.mesh.element_rule(e, d.quad_order)?;
    let basis = &d.spaces[e];
    let tab = basis.evaluate(&rule.points, true);
    let n = basis.dim();
    let mut l = Local::new(d.dofs(e).collect(), tab.n_funcs - n);
    let (b1, c1) = (d.morawetz.b_x(), d.morawetz.c_y());
    let w_len = l.width;
    for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let (b, c) = d.morawetz.eval(x);
        let k = d.mesh.spec().k(x[1]);
        let f = data.source(x);
        for i in 0..n {
            let a = tab.at(q, i);
            // ∇(Mv)
            let gx = b1 * tab.dx[a] + b * tab.dxx[a] + c * tab.dxy[a];
            let gy = b * tab.dxy[a] + c1 * tab.dy[a] + c * tab.dyy[a];
            let mv = b * tab.dx[a] + c * tab.dy[a];
            let lv = x[1] * tab.dxx[a] + tab.dyy[a];
            l.rhs[CONSISTENCY][i] += w * f * mv;
            if least_squares {
                l.rhs[LEAST_SQUARES][i] += w * f * lv;
            }
            for j in 0..tab.n_funcs {
                let t = tab.at(q, j);
                l.mats[CONSISTENCY][i * w_len + j] -= w * (k * tab.dx[t] * gx + tab.dy[t] * gy);
                if least_squares {
                    let lu = x[1] * tab.dxx[t] + tab.dyy[t];
                    l.mats[LEAST_SQUARES][i * w_len + j] += w * lu * lv;
                }
            }
        }
    }
    Ok(l)
}

fn facet_local(d: &Discretization, f: usize, data: &dyn ProblemData) -> Result<(Region, Local)> {
    let facet = &d.mesh.facets()[f];
    let rule = d.mesh.facet_rule(f, d.quad_order)?;
    let h = facet.h;
    let p2 = (d.degree() * d.degree()) as f64;
    let (elements, signs): (Vec<usize>, Vec<f64>) = match facet.adjacency {
        Adjacency::Interior { plus, minus } => (vec![plus, minus], vec![1.0, -1.0]),
        Adjacency::Boundary { element } => (vec![element], vec![1.0]),
    };
    let tabs: Vec<BasisTable> = elements
        .iter()
        .map(|&e| d.spaces[e].evaluate(&rule.rule.points, true))
        .collect();
    let sides: Vec<(&BasisTable, usize)> =
        tabs.iter().zip(&elements).map(|(t, &e)| (t, d.spaces[e].dim())).collect();
    let cols = column_order(&sides);
    let dofs: Vec<usize> = elements.iter().flat_map(|&e| d.dofs(e)).collect();
    let n = dofs.len();
    let mut l = Local::new(dofs, cols.len() - n);
    let width = l.width;

    let interior = facet.class == FacetClass::Interior;
    let dirichlet = facet.is_dirichlet();
    for q in 0..rule.len() {
        let x = rule.rule.points[q];
        let w = rule.rule.weights[q];
        let nrm = rule.normals[q];
        let bc = d.morawetz.eval(x);
        let k = d.mesh.spec().k(x[1]);
        let tr: Vec<Vec<Trace>> = tabs
            .iter()
            .zip(&signs)
            .map(|(t, &s)| traces(t, q, s, bc, k, nrm))
            .collect();
        let col: Vec<Trace> = cols.iter().map(|&(s, i)| tr[s][i]).collect();
        let (g, gt) = if dirichlet {
            let gg = data.dirichlet_gradient(x);
            (data.dirichlet(x), -gg[0] * nrm[1] + gg[1] * nrm[0])
        } else {
            (0.0, 0.0)
        };
        for i in 0..n {
            let v = col[i];
            if dirichlet {
                l.rhs[VALUE_JUMP][i] += w / (h * h * h) * g * v.v;
                l.rhs[TANGENTIAL][i] += w * p2 / h * gt * v.dt;
            }
            for (j, u) in col.iter().enumerate() {
                let at = i * width + j;
                if interior {
                    let ss = u.sign * v.sign;
                    l.mats[CONSISTENCY][at] += w * 0.5 * u.flux * v.sign * v.mv;
                    l.mats[VALUE_JUMP][at] += w / (h * h * h) * ss * u.v * v.v;
                    l.mats[GRADIENT_JUMP][at] += w * p2 / h * ss * (u.dx * v.dx + u.dy * v.dy);
                } else {
                    l.mats[CONSISTENCY][at] += w * u.flux * v.mv;
                    if dirichlet {
                        l.mats[VALUE_JUMP][at] += w / (h * h * h) * u.v * v.v;
                        l.mats[TANGENTIAL][at] += w * p2 / h * u.dt * v.dt;
                    }
                }
            }
        }
    }
    let region = if interior { Region::Interior } else { Region::Boundary };
    Ok((region, l))
}

fn all_locals(d: &Discretization, data: &dyn ProblemData, least_squares: bool) -> Result<Vec<(Region, Local)>> {
    let mut locals: Vec<(Region, Local)> = (0..d.mesh.n_elements())
        .into_par_iter()
        .map(|e| element_local(d, e, data, least_squares).map(|l| (Region::Volume, l)))
        .collect::<Result<_>>()?;
    let facets: Vec<(Region, Local)> = (0..d.mesh.facets().len())
        .into_par_iter()
        .map(|f| facet_local(d, f, data))
        .collect::<Result<_>>()?;
    locals.extend(facets);
    Ok(locals)
}

/// A matrix with its right-hand side.
#[derive(Clone, Debug)]
pub struct Contributions {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// The five parts `[A_h, value jumps, gradient jumps, tangential
/// derivatives, least squares]`, each with unit weight. Right-hand sides
/// include the data terms and, for Trefftz spaces, the shift by the
/// particular solution.
#[derive(Clone, Debug)]
pub struct FormParts {
    pub parts: Vec<Contributions>,
    pub offsets: Vec<usize>,
}

impl FormParts {
    pub fn system(&self, penalties: &Penalties) -> LinearSystem {
        let w = penalties.weights();
        let terms: Vec<(f64, &SparseMatrix)> = self.parts.iter().zip(w).map(|(p, w)| (w, &p.matrix)).collect();
        let n = self.parts[0].rhs.len();
        let mut rhs = vec![0.0; n];
        for (p, w) in self.parts.iter().zip(w) {
            if w != 0.0 {
                for (r, v) in rhs.iter_mut().zip(&p.rhs) {
                    *r += w * v;
                }
            }
        }
        LinearSystem { matrix: SparseMatrix::linear_combination(&terms), rhs, offsets: self.offsets.clone() }
    }

    /// Matrix of `A_J` for the given penalties.
    pub fn jump_matrix(&self, penalties: &Penalties) -> SparseMatrix {
        SparseMatrix::linear_combination(&[
            (penalties.gamma1, &self.parts[VALUE_JUMP].matrix),
            (penalties.gamma2, &self.parts[GRADIENT_JUMP].matrix),
            (penalties.gamma3, &self.parts[TANGENTIAL].matrix),
        ])
    }

    pub fn consistency_matrix(&self) -> &SparseMatrix {
        &self.parts[CONSISTENCY].matrix
    }
}

pub fn assemble_parts(d: &Discretization, data: Option<&dyn ProblemData>) -> Result<FormParts> {
    let data = data.unwrap_or(&ZeroData);
    let locals = all_locals(d, data, true)?;
    let regions = [Region::Volume, Region::Interior, Region::Boundary];
    let parts = (0..N_PARTS)
        .map(|k| {
            let mut weights = [0.0; N_PARTS];
            weights[k] = 1.0;
            let (matrix, rhs) = scatter(d.n_dofs(), &locals, &Scatter { weights, regions: &regions, data_rhs: true, offsets: true });
            Contributions { matrix, rhs }
        })
        .collect();
    Ok(FormParts { parts, offsets: d.offsets.clone() })
}

/// The full system `A_h + A_J (+ γ4 LS)` with right-hand side `L_h`.
pub fn assemble_system(d: &Discretization, penalties: &Penalties, data: &dyn ProblemData) -> Result<LinearSystem> {
    penalties.validate()?;
    let locals = all_locals(d, data, penalties.gamma4 > 0.0)?;
    let regions = [Region::Volume, Region::Interior, Region::Boundary];
    let (matrix, rhs) = scatter(
        d.n_dofs(),
        &locals,
        &Scatter { weights: penalties.weights(), regions: &regions, data_rhs: true, offsets: true },
    );
    Ok(LinearSystem { matrix, rhs, offsets: d.offsets.clone() })
}

fn assemble_region(
    d: &Discretization,
    data: &dyn ProblemData,
    regions: &[Region],
    weights: [f64; N_PARTS],
    data_rhs: bool,
) -> Result<Contributions> {
    let locals = all_locals(d, data, weights[LEAST_SQUARES] != 0.0)?;
    let (matrix, rhs) = scatter(d.n_dofs(), &locals, &Scatter { weights, regions, data_rhs, offsets: false });
    Ok(Contributions { matrix, rhs })
}

/// `-Σ_T ∫_T W∇u·∇(Mv)`.
pub fn assemble_volume(d: &Discretization) -> Result<SparseMatrix> {
    Ok(assemble_region(d, &ZeroData, &[Region::Volume], [1.0, 0.0, 0.0, 0.0, 0.0], false)?.matrix)
}

/// Consistency and penalty terms on interior facets.
pub fn assemble_interior_facets(d: &Discretization, penalties: &Penalties) -> Result<SparseMatrix> {
    let mut w = penalties.weights();
    w[LEAST_SQUARES] = 0.0;
    Ok(assemble_region(d, &ZeroData, &[Region::Interior], w, false)?.matrix)
}

/// Flux terms on `F_D ∪ F_2`, Dirichlet penalties and their data.
pub fn assemble_boundary_facets(d: &Discretization, penalties: &Penalties, data: &dyn ProblemData) -> Result<Contributions> {
    let mut w = penalties.weights();
    w[LEAST_SQUARES] = 0.0;
    assemble_region(d, data, &[Region::Boundary], w, true)
}

/// `Σ_T ∫_T f Mv`.
pub fn assemble_source(d: &Discretization, data: &dyn ProblemData) -> Result<Vec<f64>> {
    Ok(assemble_region(d, data, &[Region::Volume], [1.0, 0.0, 0.0, 0.0, 0.0], true)?.rhs)
}

/// `γ4 ∫ Lu Lv` and `γ4 ∫ f Lv`.
pub fn assemble_least_squares(d: &Discretization, data: &dyn ProblemData, gamma4: f64) -> Result<Contributions> {
    if gamma4 == 0.0 {
        let n = d.n_dofs();
        return Ok(Contributions { matrix: SparseMatrix::from_triplets(n, n, Vec::new()), rhs: vec![0.0; n] });
    }
    assemble_region(d, data, &[Region::Volume], [0.0, 0.0, 0.0, 0.0, gamma4], true)
}

/// Discrete solution: one coefficient block per element, with each
/// element's particular solution (if any) added with unit weight.
#[derive(Clone, Debug)]
pub struct SolutionField<'a> {
    pub disc: &'a Discretization,
    pub coeffs: Vec<f64>,
}

impl<'a> SolutionField<'a> {
    pub fn new(disc: &'a Discretization, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), disc.n_dofs());
        Self { disc, coeffs }
    }

    pub fn local(&self, e: usize) -> &[f64] {
        &self.coeffs[self.disc.dofs(e)]
    }

    /// Values and derivatives on element `e` as a one-function table.
    pub fn eval(&self, e: usize, points: &[crate::geometry::Point]) -> BasisTable {
        let basis = &self.disc.spaces[e];
        let tab = basis.evaluate(points, true);
        let mut c = self.local(e).to_vec();
        if basis.has_particular() {
            c.push(1.0);
        }
        tab.combine(&c)
    }

    pub fn value(&self, e: usize, p: crate::geometry::Point) -> f64 {
        self.eval(e, &[p]).v[0]
    }
}
