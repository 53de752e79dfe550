//! Experiment driver: single solves against the manufactured solution,
//! h- and p-sweeps, penalty grids, rate fitting and CSV output.

mod config;
mod plot;

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use crate::assembly::{assemble_parts, assemble_system, Discretization, Penalties, SolutionField};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::norms::{error_report, ErrorReport, L2ErrorEvaluator};
use crate::problem::{ExactSolution, Manufactured};
use crate::solver::solve;

pub use config::{parse_multiplier, MeshSource, Overrides, RunConfig};
pub use plot::{plot_h_sweep, plot_p_sweep};

pub const CSV_HEADER: &str = "space,p,level,h_max,n_dofs,energy,residual,l2,l2_elliptic,l2_hyperbolic,solver_residual";

/// One solve measured against the exact solution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub space: String,
    pub p: usize,
    pub level: Option<usize>,
    pub h_max: f64,
    pub report: ErrorReport,
    pub solver_residual: f64,
}

impl RunResult {
    pub fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{:.10e},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.3e}",
            self.space,
            self.p,
            self.level.map(|l| l.to_string()).unwrap_or_default(),
            self.h_max,
            r.n_dofs,
            r.energy,
            r.residual_norm,
            r.l2_total,
            r.l2_elliptic,
            r.l2_hyperbolic,
            self.solver_residual
        )
    }
}

/// Builds the discretization of `config` on `mesh` for the data `u`.
pub fn discretize<U: ExactSolution>(config: &RunConfig, mesh: Mesh, u: &U) -> Result<Discretization> {
    Discretization::new(mesh, config.space_config()?, config.morawetz()?, Some(u), config.quad_order)
        .context("spaces: local basis construction failed")
}

/// Assembles, solves and measures one configuration against `u`.
pub fn run_exact<U: ExactSolution>(config: &RunConfig, mesh: Mesh, u: &U) -> Result<(Discretization, Vec<f64>, RunResult)> {
    config.validate()?;
    let d = discretize(config, mesh, u)?;
    let system = assemble_system(&d, &config.penalties, u).context("assembly")?;
    let sol = solve(&system).context("solve")?;
    let report = {
        let field = SolutionField::new(&d, sol.x.clone());
        error_report(&d, &field, u, &config.penalties).context("norms")?
    };
    let result = RunResult {
        space: config.space.name().to_string(),
        p: config.p,
        level: config.level(),
        h_max: d.mesh.h_max(),
        report,
        solver_residual: sol.residual,
    };
    Ok((d, sol.x, result))
}

/// Solves the manufactured problem; writes a CSV row to `out` and, with
/// `samples > 0`, a point-sample grid of `u_h` next to it.
pub fn cmd_solve(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let mesh = config.build_mesh()?;
    let (d, x, result) = run_exact(config, mesh, &Manufactured)?;
    if let Some(out) = &config.out {
        write_file(out, &format!("{CSV_HEADER}\n{}\n", result.csv_row()))?;
        if config.samples > 0 {
            let field = SolutionField::new(&d, x);
            let path = out.with_extension("samples.csv");
            write_file(&path, &sample_grid(&field, config.samples, &Manufactured))?;
        }
    }
    Ok(result)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("output: cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("output: cannot write {}", path.display()))
}

fn barycentric_inside(t: [Point; 3], p: Point) -> bool {
    let cross = |a: Point, b: Point, c: Point| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let s = cross(t[0], t[1], t[2]).signum();
    (0..3).all(|i| s * cross(t[i], t[(i + 1) % 3], p) >= -1e-12)
}

/// Element containing `p`. Points between a curved edge and its chord go
/// to the nearest curved element.
pub fn locate(mesh: &Mesh, p: Point) -> Option<usize> {
    if !mesh.spec().contains(p) {
        return None;
    }
    (0..mesh.n_elements())
        .find(|&e| barycentric_inside(mesh.element_vertices(e), p))
        .or_else(|| {
            (0..mesh.n_elements())
                .filter(|&e| mesh.curved_edge(e).is_some())
                .min_by(|&a, &b| {
                    let da = dist2(mesh.centroid(a), p);
                    let db = dist2(mesh.centroid(b), p);
                    da.total_cmp(&db)
                })
        })
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// `x,y,u_h,u` on an `n × n` grid over the bounding box, inside points only.
pub fn sample_grid(field: &SolutionField, n: usize, u: &dyn ExactSolution) -> String {
    let mesh = &field.disc.mesh;
    let (y0, y1) = (mesh.spec().y_c(), mesh.spec().d);
    let mut s = String::from("x,y,u_h,u\n");
    for i in 0..n {
        for j in 0..n {
            let t = |k: usize| if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
            let p = [-1.0 + 2.0 * t(j), y0 + (y1 - y0) * t(i)];
            if let Some(e) = locate(mesh, p) {
                let _ = writeln!(s, "{:.10e},{:.10e},{:.10e},{:.10e}", p[0], p[1], field.value(e, p), u.value(p));
            }
        }
    }
    s
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_rate(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 2 {
        bail!("fit: need at least two (h, e) pairs");
    }
    if h.iter().chain(e).any(|v| !(*v > 0.0) || !v.is_finite()) {
        bail!("fit: all h and e must be positive and finite");
    }
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        bail!("fit: all h are equal");
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HSweep {
    pub rows: Vec<RunResult>,
    pub energy_rate: f64,
    pub l2_rate: f64,
    pub residual_rate: f64,
}

impl HSweep {
    /// Observed rates between consecutive levels, `(energy, l2)`.
    pub fn step_rates(&self) -> Vec<(f64, f64)> {
        self.rows
            .windows(2)
            .map(|w| {
                let lh = (w[1].h_max / w[0].h_max).ln();
                (
                    (w[1].report.energy / w[0].report.energy).ln() / lh,
                    (w[1].report.l2_total / w[0].report.l2_total).ln() / lh,
                )
            })
            .collect()
    }

    pub fn csv(&self) -> String {
        let mut s = format!("{CSV_HEADER},energy_rate,l2_rate\n");
        let rates = self.step_rates();
        for (i, r) in self.rows.iter().enumerate() {
            let (a, b) = match i.checked_sub(1) {
                Some(k) => (format!("{:.4}", rates[k].0), format!("{:.4}", rates[k].1)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(s, "{},{a},{b}", r.csv_row());
        }
        s
    }

    pub fn fit_csv(&self) -> String {
        let r = &self.rows[0];
        format!(
            "space,p,levels,energy_rate,l2_rate,residual_rate\n{},{},{},{:.4},{:.4},{:.4}\n",
            r.space,
            r.p,
            self.rows.iter().map(|r| r.level.map(|l| l.to_string()).unwrap_or_default()).collect::<Vec<_>>().join(" "),
            self.energy_rate,
            self.l2_rate,
            self.residual_rate
        )
    }
}

/// Runs the refinement levels of `config.levels` on the builtin meshes and
/// fits rates. A failing level aborts the sweep; the completed rows are
/// still written.
pub fn h_sweep<U: ExactSolution>(config: &RunConfig, u: &U) -> Result<HSweep> {
    config.validate()?;
    if config.levels.len() < 3 {
        bail!("h-sweep: need at least three levels, got {}", config.levels.len());
    }
    let mut rows = Vec::new();
    let mut failure = None;
    for &l in &config.levels {
        let mut c = config.clone();
        c.mesh = MeshSource::Level(l);
        match c.build_mesh().and_then(|m| run_exact(&c, m, u)) {
            Ok((_, _, r)) => rows.push(r),
            Err(e) => {
                failure = Some(e.context(format!("h-sweep: level {l}")));
                break;
            }
        }
    }
    let fit = |f: fn(&RunResult) -> f64| -> Result<f64> {
        let h: Vec<f64> = rows.iter().map(|r| r.h_max).collect();
        let e: Vec<f64> = rows.iter().map(f).collect();
        fit_rate(&h, &e)
    };
    let sweep = if rows.len() >= 2 {
        Some(HSweep {
            energy_rate: fit(|r| r.report.energy)?,
            l2_rate: fit(|r| r.report.l2_total)?,
            residual_rate: fit(|r| r.report.residual_norm)?,
            rows: rows.clone(),
        })
    } else {
        None
    };
    if let Some(out) = &config.out {
        match &sweep {
            Some(s) => {
                write_file(out, &s.csv())?;
                write_file(&out.with_extension("fit.csv"), &s.fit_csv())?;
            }
            None => {
                let body: String = rows.iter().map(|r| r.csv_row() + "\n").collect();
                write_file(out, &format!("{CSV_HEADER}\n{body}"))?;
            }
        }
        if let (Some(svg), Some(s)) = (&config.svg, &sweep) {
            plot_h_sweep(s, svg)?;
        }
    }
    match (failure, sweep) {
        (Some(e), _) => Err(e),
        (None, Some(s)) => Ok(s),
        (None, None) => Err(anyhow!("h-sweep: no levels completed")),
    }
}

/// One row of a p-sweep; failures are kept with their message.
#[derive(Clone, Debug, PartialEq)]
pub struct PRow {
    pub p: usize,
    pub result: std::result::Result<RunResult, String>,
}

/// Runs degrees `config.p_range` on the configured mesh.
pub fn p_sweep<U: ExactSolution>(config: &RunConfig, u: &U) -> Result<Vec<PRow>> {
    config.validate()?;
    let mesh = config.build_mesh()?;
    let (lo, hi) = config.p_range;
    let rows: Vec<PRow> = (lo..=hi)
        .map(|p| {
            let mut c = config.clone();
            c.p = p;
            c.quad_order = config.quad_order.map(|q| q.max(2 * p + 1));
            PRow { p, result: run_exact(&c, mesh.clone(), u).map(|(_, _, r)| r).map_err(|e| format!("{e:#}")) }
        })
        .collect();
    if let Some(out) = &config.out {
        let mut s = format!("{CSV_HEADER},status\n");
        for r in &rows {
            match &r.result {
                Ok(res) => {
                    let _ = writeln!(s, "{},ok", res.csv_row());
                }
                Err(e) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},,,,,,,,,\"{}\"",
                        config.space.name(),
                        r.p,
                        config.level().map(|l| l.to_string()).unwrap_or_default(),
                        e.replace('"', "'")
                    );
                }
            }
        }
        write_file(out, &s)?;
        if let Some(svg) = &config.svg {
            plot_p_sweep(&rows, svg)?;
        }
    }
    Ok(rows)
}

/// `n` equispaced values in `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyGrid {
    /// Exponents of 10 along both axes.
    pub exponents: Vec<f64>,
    /// `errors[i][j]`: L² error for `γ1 = 10^e_i`, `γ2 = γ3 = 10^e_j`;
    /// infinite where the solve failed.
    pub errors: Vec<Vec<f64>>,
    /// Error of the configured penalties on the same mesh.
    pub reference: f64,
    pub level: Option<usize>,
    pub h_max: f64,
}

impl PenaltyGrid {
    pub fn csv(&self) -> String {
        let mut s = String::from("gamma1\\gamma2=gamma3");
        for e in &self.exponents {
            let _ = write!(s, ",{:.6e}", 10f64.powf(*e));
        }
        s.push('\n');
        for (e, row) in self.exponents.iter().zip(&self.errors) {
            let _ = write!(s, "{:.6e}", 10f64.powf(*e));
            for v in row {
                let _ = write!(s, ",{v:.10e}");
            }
            s.push('\n');
        }
        s
    }
}

/// Level whose maximum element diameter is closest to `h`.
pub fn level_for_h(spec: crate::geometry::DomainSpec, h: f64) -> usize {
    let mut mesh = Mesh::builtin_coarse(spec);
    let mut best = (0, (mesh.h_max() - h).abs());
    for l in 1..=7 {
        mesh = mesh.refine();
        let diff = (mesh.h_max() - h).abs();
        if diff < best.1 {
            best = (l, diff);
        }
        if mesh.h_max() < h {
            break;
        }
    }
    best.0
}

/// L² errors over the 30 × 30 grid of `(γ1, γ2 = γ3)` with exponents of
/// 10 equispaced in `[-5, 5]`. The operator parts are assembled once.
pub fn penalty_sweep<U: ExactSolution>(config: &RunConfig, u: &U) -> Result<PenaltyGrid> {
    penalty_sweep_with(config, u, &linspace(-5.0, 5.0, 30))
}

pub fn penalty_sweep_with<U: ExactSolution>(config: &RunConfig, u: &U, exponents: &[f64]) -> Result<PenaltyGrid> {
    config.validate()?;
    let mesh = config.build_mesh()?;
    let d = discretize(config, mesh, u)?;
    let parts = assemble_parts(&d, Some(u)).context("assembly")?;
    let eval = L2ErrorEvaluator::new(&d, u).context("norms")?;
    let error_for = |pen: Penalties| -> f64 {
        let system = parts.system(&pen);
        match solve(&system) {
            Ok(s) => eval.error(&s.x),
            Err(_) => f64::INFINITY,
        }
    };
    let reference = error_for(config.penalties);
    if !reference.is_finite() {
        bail!("penalty-sweep: the configured penalties fail to solve");
    }
    let cells: Vec<(usize, usize)> =
        (0..exponents.len()).flat_map(|i| (0..exponents.len()).map(move |j| (i, j))).collect();
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let g1 = 10f64.powf(exponents[i]);
            let g23 = 10f64.powf(exponents[j]);
            error_for(Penalties { gamma1: g1, gamma2: g23, gamma3: g23, gamma4: config.penalties.gamma4 })
        })
        .collect();
    let errors = flat.chunks(exponents.len()).map(|c| c.to_vec()).collect();
    let grid = PenaltyGrid {
        exponents: exponents.to_vec(),
        errors,
        reference,
        level: config.level(),
        h_max: d.mesh.h_max(),
    };
    if let Some(out) = &config.out {
        write_file(out, &grid.csv())?;
    }
    Ok(grid)
}

/// Mesh statistics and the stability constants of the configuration.
pub fn mesh_info(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let mesh = config.build_mesh()?;
    let q = mesh.quality().context("mesh")?;
    let m = config.morawetz()?;
    let k = m.constants(&q, config.penalties.gamma2);
    let n_curved = (0..mesh.n_elements()).filter(|&e| mesh.curved_edge(e).is_some()).count();
    let mut s = String::new();
    let _ = writeln!(s, "vertices          {}", mesh.vertices().len());
    let _ = writeln!(s, "elements          {} ({n_curved} curved)", mesh.n_elements());
    let _ = writeln!(s, "interior facets   {}", mesh.count_facets(crate::mesh::FacetClass::Interior));
    let _ = writeln!(s, "boundary facets   {}", mesh.facets().len() - mesh.count_facets(crate::mesh::FacetClass::Interior));
    let _ = writeln!(s, "h_max             {:.6}", mesh.h_max());
    let _ = writeln!(s, "area              {:.10} (exact {:.10})", mesh.area().context("mesh")?, mesh.spec().area());
    let _ = writeln!(s, "r*                {:.6}", q.r_star);
    let _ = writeln!(s, "C_g               {:.6}", q.c_g);
    let _ = writeln!(s, "C_tr              {:.6}", q.c_tr);
    let _ = writeln!(s, "delta             {:.6}", m.delta);
    let _ = writeln!(s, "beta              {:.6}", m.beta);
    let _ = writeln!(s, "gamma*            {:.6e}", k.gamma_star);
    let _ = writeln!(s, "M (gamma2 = {})  {:.6}", config.penalties.gamma2, k.m_cont);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_rate_examples() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e2: Vec<f64> = h.iter().map(|v| v * v).collect();
        assert!((fit_rate(&h, &e2).unwrap() - 2.0).abs() < 1e-12);
        let e3: Vec<f64> = h.iter().map(|v| 7.3 * v * v * v).collect();
        assert!((fit_rate(&h, &e3).unwrap() - 3.0).abs() < 1e-12);
        assert!((fit_rate(&[0.5, 0.25], &[1.0, 0.25]).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_rate(&[0.5], &[1.0]).is_err());
        assert!(fit_rate(&[0.5, 0.25], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-5.0, 5.0, 30);
        assert_eq!(v.len(), 30);
        assert_eq!(v[0], -5.0);
        assert_eq!(v[29], 5.0);
    }

    #[test]
    fn level_for_tenth() {
        let spec = crate::geometry::DomainSpec::tricomi(0.5).unwrap();
        let l = level_for_h(spec, 0.1);
        assert!((Mesh::builtin(spec, l).h_max() - 0.1).abs() < 0.03);
    }

    #[test]
    fn locate_finds_points() {
        let spec = crate::geometry::DomainSpec::tricomi(0.5).unwrap();
        let mesh = Mesh::builtin(spec, 2);
        assert_eq!(locate(&mesh, [0.0, 2.0]), None);
        for e in 0..mesh.n_elements() {
            assert_eq!(locate(&mesh, mesh.centroid(e)), Some(e));
        }
    }

    #[test]
    fn solve_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.p = 2;
        c.mesh = MeshSource::Level(1);
        c.out = Some(dir.path().join("run.csv"));
        c.samples = 5;
        let r = cmd_solve(&c).unwrap();
        let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 2);
        assert!(r.solver_residual <= crate::solver::SOLVE_TOL);
        let samples = std::fs::read_to_string(dir.path().join("run.samples.csv")).unwrap();
        assert!(samples.lines().count() > 5);
    }
}
