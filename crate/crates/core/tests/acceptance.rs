//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a criterion outside `KNOWN_FAILURES` fails.
//!
//! `ACCEPTANCE_ONLY=1,5` restricts the run to the listed criteria.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tricomi_dg::assembly::{assemble_parts, Discretization, Penalties, SolutionField};
use tricomi_dg::geometry::{BoundarySide, DomainSpec, Point};
use tricomi_dg::harness::{h_sweep, level_for_h, penalty_sweep, run_exact, MeshSource, RunConfig};
use tricomi_dg::mesh::{Adjacency, FacetClass, Mesh};
use tricomi_dg::morawetz::{boundary_forms, Morawetz, Multiplier};
use tricomi_dg::norms::{l2_projection, norm_order, norm_parts, Difference, Exact};
use tricomi_dg::problem::{Manufactured, PolynomialSolution};
use tricomi_dg::spaces::{element_basis, monomial_table, SpaceConfig, SpaceKind};
use tricomi_dg::taylor::monomial_count;

/// Criteria that fail for documented reasons; see README.
const KNOWN_FAILURES: &[usize] = &[3, 9];

const SWEEP_LEVELS: [usize; 4] = [3, 4, 5, 6];
const RATE_TOL: f64 = 0.3;
const SUPER_ENERGY_MIN: f64 = 1.7;
const SUPER_L2_MIN: f64 = 2.6;
const COERCIVITY_SAMPLES: usize = 50;
const COERCIVITY_FACTOR: f64 = 0.25;
const IDENTITY_SAMPLES: usize = 20;
const IDENTITY_REL_TOL: f64 = 1e-9;
const GAMMA2_TOL: f64 = 1e-12;
const DIM_ELEMENTS: usize = 20;
const DIM_RANK_TOL: f64 = 1e-9;
const DIM_RESIDUAL_TOL: f64 = 1e-9;
const EXACTNESS_TOL: f64 = 1e-7;
const PENALTY_BLOWUP: f64 = 100.0;
const PENALTY_STABLE: f64 = 10.0;
const PENALTY_LARGE: f64 = 10.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn spec() -> DomainSpec {
    DomainSpec::tricomi(0.5).unwrap()
}

fn morawetz() -> Morawetz {
    Morawetz::new(Multiplier::default(), &spec()).unwrap()
}

fn random_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn homogeneous(kind: SpaceKind, p: usize, level: usize) -> Discretization {
    let mesh = Mesh::builtin(spec(), level);
    Discretization::new(mesh, SpaceConfig::new(kind, p).unwrap(), morawetz(), None, None).unwrap()
}

fn sweep_config(kind: SpaceKind, p: usize) -> RunConfig {
    RunConfig { space: kind, p, levels: SWEEP_LEVELS.to_vec(), ..RunConfig::default() }
}

struct Rates {
    energy: f64,
    l2: f64,
}

fn rates(kind: SpaceKind, p: usize, cache: &mut Vec<(SpaceKind, usize, f64, f64)>) -> Rates {
    if let Some(&(_, _, e, l)) = cache.iter().find(|c| c.0 == kind && c.1 == p) {
        return Rates { energy: e, l2: l };
    }
    let t = Instant::now();
    let s = h_sweep(&sweep_config(kind, p), &Manufactured).unwrap();
    println!(
        "    {kind} p={p}: energy rate {:.3}, L2 rate {:.3}, h = {:.4}..{:.4} ({:.1}s)",
        s.energy_rate,
        s.l2_rate,
        s.rows[0].h_max,
        s.rows.last().unwrap().h_max,
        t.elapsed().as_secs_f64()
    );
    cache.push((kind, p, s.energy_rate, s.l2_rate));
    Rates { energy: s.energy_rate, l2: s.l2_rate }
}

fn criterion_1(cache: &mut Vec<(SpaceKind, usize, f64, f64)>) -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for kind in [SpaceKind::QuasiTrefftz, SpaceKind::EmbeddedTrefftz] {
        for p in 2..=4 {
            let r = rates(kind, p, cache);
            let dev = (r.energy - (p as f64 - 1.0)).abs();
            worst = worst.max(dev);
            parts.push(format!("{kind}{p}={:.2}", r.energy));
        }
    }
    Outcome {
        pass: worst <= RATE_TOL,
        detail: format!("{}; max |rate - (p-1)| = {worst:.3} (tol {RATE_TOL}); {:.0}s", parts.join(" "), t.elapsed().as_secs_f64()),
    }
}

fn criterion_2(cache: &mut Vec<(SpaceKind, usize, f64, f64)>) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for p in 2..=4 {
        let target = if p % 2 == 0 { p as f64 } else { p as f64 - 1.0 };
        let r = rates(SpaceKind::QuasiTrefftz, p, cache);
        worst = worst.max((r.l2 - target).abs());
        parts.push(format!("p={p}: {:.2} (target {target})", r.l2));
    }
    Outcome { pass: worst <= RATE_TOL, detail: format!("{}; max deviation {worst:.3} (tol {RATE_TOL})", parts.join(", ")) }
}

fn criterion_3(cache: &mut Vec<(SpaceKind, usize, f64, f64)>) -> Outcome {
    let r = rates(SpaceKind::Standard, 2, cache);
    Outcome {
        pass: r.energy >= SUPER_ENERGY_MIN && r.l2 >= SUPER_L2_MIN,
        detail: format!(
            "energy rate {:.3} (need >= {SUPER_ENERGY_MIN}), L2 rate {:.3} (need >= {SUPER_L2_MIN})",
            r.energy, r.l2
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    let mut gamma_star = 0.0;
    for kind in [SpaceKind::Standard, SpaceKind::QuasiTrefftz, SpaceKind::EmbeddedTrefftz] {
        for p in 2..=4 {
            let d = homogeneous(kind, p, 2);
            let k = d.morawetz.constants(&d.mesh.quality().unwrap(), 1.0);
            gamma_star = k.gamma_star;
            let pen = Penalties { gamma1: 10.0, gamma2: k.gamma_star, gamma3: k.gamma_star, gamma4: 0.0 };
            let parts = assemble_parts(&d, None).unwrap();
            let a = parts.consistency_matrix();
            let j = parts.jump_matrix(&pen);
            for _ in 0..COERCIVITY_SAMPLES {
                let v = random_vec(&mut rng, d.n_dofs());
                let form = a.bilinear(&v, &v) + j.bilinear(&v, &v);
                let field = SolutionField::new(&d, v);
                let norm_sq = norm_parts(&d, &field).unwrap().energy(d.morawetz.delta, &pen).powi(2);
                let ratio = form / norm_sq;
                min_ratio = min_ratio.min(ratio);
                if ratio < COERCIVITY_FACTOR {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!(
            "gamma* = {gamma_star:.4e}; {violations} violations in {} samples; min (A_h + A_J)(v,v) / |||v|||^2 = {min_ratio:.4}",
            9 * COERCIVITY_SAMPLES
        ),
    }
}

/// Right side of the energy identity for `A_h(v, v) + A_J(v, v)`, by
/// direct quadrature from the traces of `v`.
fn identity_rhs(d: &Discretization, v: &SolutionField, pen: &Penalties) -> f64 {
    let mesh = &d.mesh;
    let order = norm_order(d);
    let (bx, cy) = (d.morawetz.b_x(), d.morawetz.c_y());
    let p2 = (d.degree() * d.degree()) as f64;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let rule = mesh.element_rule(e, order).unwrap();
        let t = v.eval(e, &rule.points);
        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let (_, c) = d.morawetz.eval(x);
            let y = x[1];
            total += 0.5 * w * (t.dx[q].powi(2) * (-y * bx + c + y * cy) + t.dy[q].powi(2) * (bx - cy));
        }
    }
    // Trace quantities at one point: (v, v_x, v_y, W∇v, Mv, K v_x² + v_y²).
    let trace = |t: &tricomi_dg::spaces::BasisTable, q: usize, x: Point| {
        let (b, c) = d.morawetz.eval(x);
        let (vx, vy) = (t.dx[q], t.dy[q]);
        (t.v[q], vx, vy, [x[1] * vx, vy], b * vx + c * vy, x[1] * vx * vx + vy * vy)
    };
    for (f, facet) in mesh.facets().iter().enumerate() {
        let fr = mesh.facet_rule(f, order).unwrap();
        let h = facet.h;
        match facet.adjacency {
            Adjacency::Interior { plus, minus } => {
                let tp = v.eval(plus, &fr.rule.points);
                let tm = v.eval(minus, &fr.rule.points);
                let cp = mesh.centroid(plus);
                for (q, (&x, &w)) in fr.rule.points.iter().zip(&fr.rule.weights).enumerate() {
                    let mut n = fr.normals[q];
                    if n[0] * (x[0] - cp[0]) + n[1] * (x[1] - cp[1]) < 0.0 {
                        n = [-n[0], -n[1]];
                    }
                    let (up, uxp, uyp, wp, mp, ep) = trace(&tp, q, x);
                    let (um, uxm, uym, wm, mm, em) = trace(&tm, q, x);
                    let (b, c) = d.morawetz.eval(x);
                    let avg = [0.5 * (wp[0] + wm[0]), 0.5 * (wp[1] + wm[1])];
                    let jump_m = [(mp - mm) * n[0], (mp - mm) * n[1]];
                    let jump_e = [(ep - em) * n[0], (ep - em) * n[1]];
                    total += w * (avg[0] * jump_m[0] + avg[1] * jump_m[1] - 0.5 * (b * jump_e[0] + c * jump_e[1]));
                    total += w * pen.gamma1 / h.powi(3) * (up - um).powi(2);
                    total += w * pen.gamma2 * p2 / h * ((uxp - uxm).powi(2) + (uyp - uym).powi(2));
                }
            }
            Adjacency::Boundary { element } => {
                let t = v.eval(element, &fr.rule.points);
                let ce = mesh.centroid(element);
                for (q, (&x, &w)) in fr.rule.points.iter().zip(&fr.rule.weights).enumerate() {
                    let mut n = fr.normals[q];
                    if n[0] * (x[0] - ce[0]) + n[1] * (x[1] - ce[1]) < 0.0 {
                        n = [-n[0], -n[1]];
                    }
                    let (u, ux, uy, wg, m, en) = trace(&t, q, x);
                    let (b, c) = d.morawetz.eval(x);
                    total += w * ((wg[0] * n[0] + wg[1] * n[1]) * m - 0.5 * (b * n[0] + c * n[1]) * en);
                    if facet.is_dirichlet() {
                        let vt = -ux * n[1] + uy * n[0];
                        total += w * pen.gamma1 / h.powi(3) * u * u;
                        total += w * pen.gamma3 * p2 / h * vt * vt;
                    }
                }
            }
        }
    }
    total
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let pen = Penalties::default();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (kind, p) in [(SpaceKind::Standard, 3), (SpaceKind::QuasiTrefftz, 4), (SpaceKind::EmbeddedTrefftz, 2)] {
        let d = homogeneous(kind, p, 2);
        let parts = assemble_parts(&d, None).unwrap();
        let a = parts.consistency_matrix();
        let j = parts.jump_matrix(&pen);
        for _ in 0..IDENTITY_SAMPLES {
            let v = random_vec(&mut rng, d.n_dofs());
            let lhs = a.bilinear(&v, &v) + j.bilinear(&v, &v);
            let rhs = identity_rhs(&d, &SolutionField::new(&d, v), &pen);
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
            n += 1;
        }
    }
    Outcome { pass: worst <= IDENTITY_REL_TOL, detail: format!("{n} samples, max relative difference {worst:.3e} (tol {IDENTITY_REL_TOL:e})") }
}

fn criterion_6() -> Outcome {
    let m = morawetz();
    let mut n = 0;
    let (mut qn, mut qnt, mut det, mut min_trace) = (0f64, 0f64, 0f64, f64::INFINITY);
    for level in 0..=5 {
        let mesh = Mesh::builtin(spec(), level);
        for (f, facet) in mesh.facets().iter().enumerate() {
            if facet.class != FacetClass::Boundary(BoundarySide::Gamma2) {
                continue;
            }
            let fr = mesh.facet_rule(f, 12).unwrap();
            for (q, &x) in fr.rule.points.iter().enumerate() {
                let forms = boundary_forms(m.eval(x), x[1], fr.normals[q]);
                qn = qn.max(forms.q_n.abs());
                qnt = qnt.max(forms.q_nt.abs());
                det = det.max(forms.det().abs());
                min_trace = min_trace.min(forms.trace());
                n += 1;
            }
        }
    }
    let pass = qn < GAMMA2_TOL && qnt < GAMMA2_TOL && det < GAMMA2_TOL && min_trace >= -GAMMA2_TOL;
    Outcome {
        pass,
        detail: format!("{n} points on levels 0..5: max|Q_n| {qn:.1e}, max|Q_nt| {qnt:.1e}, max|det M| {det:.1e}, min trace {min_trace:.3e}"),
    }
}

/// Numerical rank by singular values relative to the largest.
fn rank(m: &DMatrix<f64>) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&v| v > DIM_RANK_TOL * smax).count()
}

/// Constraint matrix on the scaled monomials of degree `p` about `center`:
/// rows are the conditions defining the space, columns the monomials.
/// Quasi-Trefftz: the Taylor coefficients of degree <= p-2 of `Lv` at the
/// center, obtained by fitting `Lv` with monomials of degree p-1.
/// Embedded Trefftz: the moments of `Lv` against degree <= p-2.
/// Also returns the change of coordinates from monomials to the columns.
fn constraints(
    kind: SpaceKind,
    center: Point,
    scale: f64,
    p: usize,
    rule: &tricomi_dg::quadrature::QuadRule,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let nm = monomial_count(p);
    let mono = monomial_table(center, scale, p, &rule.points);
    let lv = DMatrix::from_fn(rule.len(), nm, |q, i| {
        let k = mono.at(q, i);
        rule.points[q][1] * mono.dxx[k] + mono.dyy[k]
    });
    let nlow = monomial_count(p - 2);
    match kind {
        SpaceKind::QuasiTrefftz => {
            let fit_basis = monomial_table(center, scale, p - 1, &rule.points);
            let nf = monomial_count(p - 1);
            let a = DMatrix::from_fn(rule.len(), nf, |q, i| fit_basis.v[fit_basis.at(q, i)]);
            let coeffs = a.svd(true, true).solve(&lv, 1e-14).unwrap();
            // Graded ordering puts all monomials of degree <= p-2 first.
            (coeffs.rows(0, nlow).into_owned(), DMatrix::identity(nm, nm))
        }
        _ => {
            // Both sides in L²(T)-orthonormal coordinates so that the rank
            // is not blurred by monomial conditioning at high degree.
            let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
            let low = monomial_table(center, scale, p - 2, &rule.points);
            let vlow = DMatrix::from_fn(rule.len(), nlow, |q, a| sw[q] * low.v[low.at(q, a)]);
            let qlow = vlow.qr().q();
            let vp = DMatrix::from_fn(rule.len(), nm, |q, i| sw[q] * mono.v[mono.at(q, i)]);
            let r = vp.qr().r();
            let r_inv = r.clone().try_inverse().unwrap();
            let wlv = DMatrix::from_fn(rule.len(), nm, |q, i| sw[q] * lv[(q, i)]);
            (qlow.transpose() * wlv * r_inv, r)
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let meshes: Vec<Mesh> = (0..=4).map(|l| Mesh::builtin(spec(), l)).collect();
    let picks: Vec<(usize, usize)> = (0..DIM_ELEMENTS)
        .map(|_| {
            let l = rng.random_range(0..meshes.len());
            (l, rng.random_range(0..meshes[l].n_elements()))
        })
        .collect();
    let mut failures = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut checked = 0;
    for kind in [SpaceKind::QuasiTrefftz, SpaceKind::EmbeddedTrefftz] {
        for p in 2..=8 {
            let config = SpaceConfig::new(kind, p).unwrap();
            for &(l, e) in &picks {
                let mesh = &meshes[l];
                let rule = mesh.element_rule(e, 2 * p + 2).unwrap();
                let basis = element_basis(mesh, e, &config, None, 2 * p + 3).unwrap();
                let (c, to_cols) = constraints(kind, basis.center, basis.scale, p, &rule);
                let kernel_dim = monomial_count(p) - rank(&c);
                let vals = basis.evaluate(&rule.points, false);
                let table = DMatrix::from_fn(rule.len(), basis.dim(), |q, i| vals.v[vals.at(q, i)]);
                let span = rank(&table);
                let coeffs = &to_cols * basis.coeffs.transpose();
                let residual = (&c * &coeffs).norm() / (c.norm() * coeffs.norm());
                worst_residual = worst_residual.max(residual);
                let want = 2 * p + 1;
                if kernel_dim != want || basis.dim() != want || span != want || residual > DIM_RESIDUAL_TOL {
                    failures.push(format!("{kind} p={p} level {l} element {e}: kernel {kernel_dim}, basis {}, rank {span}", basis.dim()));
                }
                checked += 1;
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{checked} element bases; max relative constraint residual {worst_residual:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for p in [2, 3] {
        let u = PolynomialSolution::new(p, random_vec(&mut rng, monomial_count(p)));
        let config = RunConfig { space: SpaceKind::Standard, p, mesh: MeshSource::Level(3), ..RunConfig::default() };
        let (d, _, r) = run_exact(&config, config.build_mesh().unwrap(), &u).unwrap();
        let norm = norm_parts(&d, &Exact(&u)).unwrap().energy(d.morawetz.delta, &config.penalties);
        let rel = r.report.energy / norm;
        worst = worst.max(rel);
        parts.push(format!("p={p}: {rel:.2e}"));
    }
    Outcome { pass: worst <= EXACTNESS_TOL, detail: format!("|||u* - u_h||| / |||u*||| {} (tol {EXACTNESS_TOL:e})", parts.join(", ")) }
}

fn criterion_9() -> Outcome {
    let level = level_for_h(spec(), 0.1);
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [SpaceKind::Standard, SpaceKind::QuasiTrefftz, SpaceKind::EmbeddedTrefftz] {
        let t = Instant::now();
        let config = RunConfig { space: kind, p: 2, mesh: MeshSource::Level(level), ..RunConfig::default() };
        let g = penalty_sweep(&config, &Manufactured).unwrap();
        assert_eq!((g.errors.len(), g.errors[0].len()), (30, 30));
        let corner = g.errors[0][0] / g.reference;
        let mut worst: f64 = 0.0;
        let mut bad = 0;
        for (i, row) in g.errors.iter().enumerate() {
            for (j, &err) in row.iter().enumerate() {
                let large = 10f64.powf(g.exponents[i]) >= PENALTY_LARGE || 10f64.powf(g.exponents[j]) >= PENALTY_LARGE;
                if large {
                    let ratio = err / g.reference;
                    worst = worst.max(ratio);
                    bad += usize::from(!(ratio <= PENALTY_STABLE));
                }
            }
        }
        let ok = corner >= PENALTY_BLOWUP && bad == 0;
        pass &= ok;
        println!(
            "    {kind}: level {level} (h {:.4}), default error {:.3e}, corner ratio {corner:.1}, {bad} large-penalty cells above {PENALTY_STABLE}x (max {worst:.1}x) ({:.0}s)",
            g.h_max,
            g.reference,
            t.elapsed().as_secs_f64()
        );
        parts.push(format!("{kind} {}", if ok { "ok" } else { "fails" }));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn criterion_10() -> Outcome {
    let mesh = Mesh::builtin(spec(), 3);
    let k = morawetz().constants(&mesh.quality().unwrap(), 1.0);
    let mut config = RunConfig { space: SpaceKind::Standard, p: 3, mesh: MeshSource::Level(3), ..RunConfig::default() };
    config.penalties = Penalties { gamma1: 10.0, gamma2: k.gamma_star, gamma3: k.gamma_star, gamma4: 0.0 };
    let m_cont = morawetz().constants(&mesh.quality().unwrap(), k.gamma_star).m_cont;
    let (d, _, r) = run_exact(&config, mesh, &Manufactured).unwrap();
    let proj = SolutionField::new(&d, l2_projection(&d, &Manufactured).unwrap());
    let ex = Exact(&Manufactured);
    let best = norm_parts(&d, &Difference(&ex, &proj)).unwrap().residual(&config.penalties);
    let bound = (1.0 + 4.0 * m_cont) * best;
    Outcome {
        pass: r.report.energy <= bound,
        detail: format!(
            "|||u - u_h||| = {:.4e} <= (1 + 4 M) |||u - Pu|||_L = {bound:.4e} (M = {m_cont:.4}, ratio {:.2e})",
            r.report.energy,
            r.report.energy / bound
        ),
    }
}

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |id: usize| only.as_ref().is_none_or(|o| o.contains(&id));
    let names = [
        "energy-norm h-rates, QT and ET, p = 2..4",
        "L2 h-rates, QT",
        "standard-space p = 2 superconvergence",
        "coercivity with gamma2 = gamma3 = gamma*",
        "energy identity against direct quadrature",
        "characteristic boundary forms on Gamma2",
        "Trefftz space dimensions 2p + 1",
        "polynomial exactness, standard space",
        "penalty-sweep stability map, p = 2",
        "quasi-optimality bound",
    ];
    let mut cache = Vec::new();
    let mut unexpected = Vec::new();
    for (idx, name) in names.iter().enumerate() {
        let id = idx + 1;
        if !wanted(id) {
            continue;
        }
        let outcome = match id {
            1 => criterion_1(&mut cache),
            2 => criterion_2(&mut cache),
            3 => criterion_3(&mut cache),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (outcome.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("[{tag}] criterion {id}: {name}: {}", outcome.detail);
        if !outcome.pass && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
