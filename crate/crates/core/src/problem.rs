//! Problem data: exact solutions with their derived source and boundary
//! data. Derivatives come from Taylor jets, never from finite differences.

use crate::geometry::Point;
use crate::taylor::{monomial_exponents, monomial_index, Jet};

/// Source `f` and Dirichlet data `g` of a Tricomi problem.
pub trait ProblemData: Sync {
    fn source(&self, p: Point) -> f64;

    /// Taylor jet of `f` at `p`, used to build quasi-Trefftz particular
    /// solutions.
    fn source_jet(&self, p: Point, order: usize) -> Jet;

    fn dirichlet(&self, p: Point) -> f64;

    /// Gradient of an extension of `g`; only its tangential part is used.
    fn dirichlet_gradient(&self, p: Point) -> Point;
}

/// A closed-form solution `u` of `K u_xx + u_yy = f` with `K(y) = y`.
pub trait ExactSolution: Sync {
    /// Taylor jet of `u` of the given order at `p`.
    fn jet(&self, p: Point, order: usize) -> Jet;

    fn value(&self, p: Point) -> f64 {
        self.jet(p, 0).value()
    }

    fn gradient(&self, p: Point) -> Point {
        let j = self.jet(p, 1);
        [j.derivative(1, 0), j.derivative(0, 1)]
    }

    /// `(u, u_x, u_y, u_xx, u_xy, u_yy)`.
    fn derivatives(&self, p: Point) -> [f64; 6] {
        let j = self.jet(p, 2);
        [
            j.value(),
            j.derivative(1, 0),
            j.derivative(0, 1),
            j.derivative(2, 0),
            j.derivative(1, 1),
            j.derivative(0, 2),
        ]
    }
}

/// Jet of `L u = y u_xx + u_yy` from a jet of `u` of order `N + 2`.
pub fn apply_operator(u: &Jet, y0: f64) -> Jet {
    let order = u.order() - 2;
    let y = Jet::var_y(order, y0);
    &(&y * &u.differentiate(2, 0)) + &u.differentiate(0, 2)
}

impl<T: ExactSolution> ProblemData for T {
    fn source(&self, p: Point) -> f64 {
        let d = self.derivatives(p);
        p[1] * d[3] + d[5]
    }

    fn source_jet(&self, p: Point, order: usize) -> Jet {
        apply_operator(&self.jet(p, order + 2), p[1])
    }

    fn dirichlet(&self, p: Point) -> f64 {
        self.value(p)
    }

    fn dirichlet_gradient(&self, p: Point) -> Point {
        self.gradient(p)
    }
}

/// `u = (1-x)^2 (1+x) y^3 (1-y) [9(1+x)^2 + 4y^3]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Manufactured;

impl ExactSolution for Manufactured {
    fn jet(&self, p: Point, order: usize) -> Jet {
        let x = Jet::var_x(order, p[0]);
        let y = Jet::var_y(order, p[1]);
        let one_m_x = &x * -1.0 + 1.0;
        let one_p_x = x + 1.0;
        let one_m_y = &y * -1.0 + 1.0;
        let y3 = y.powi(3);
        let bracket = &(&one_p_x.powi(2) * 9.0) + &(&y3 * 4.0);
        let a = &one_m_x.powi(2) * &one_p_x;
        &(&(&a * &y3) * &one_m_y) * &bracket
    }

    fn value(&self, p: Point) -> f64 {
        let [x, y] = p;
        (1.0 - x).powi(2) * (1.0 + x) * y.powi(3) * (1.0 - y) * (9.0 * (1.0 + x).powi(2) + 4.0 * y.powi(3))
    }
}

/// A global polynomial `Σ a_{jk} x^j y^k` in graded monomial order.
#[derive(Clone, Debug)]
pub struct PolynomialSolution {
    degree: usize,
    coeffs: Vec<f64>,
}

impl PolynomialSolution {
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), crate::taylor::monomial_count(degree));
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
}

impl ExactSolution for PolynomialSolution {
    fn jet(&self, p: Point, order: usize) -> Jet {
        let x = Jet::var_x(order, p[0]);
        let y = Jet::var_y(order, p[1]);
        let mut out = Jet::zero(order);
        for (j, k) in monomial_exponents(self.degree) {
            let a = self.coeffs[monomial_index(j, k)];
            if a != 0.0 {
                out = &out + &(&(&x.powi(j as u32) * &y.powi(k as u32)) * a);
            }
        }
        out
    }
}

/// Homogeneous data.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn source(&self, _: Point) -> f64 {
        0.0
    }

    fn source_jet(&self, _: Point, order: usize) -> Jet {
        Jet::zero(order)
    }

    fn dirichlet(&self, _: Point) -> f64 {
        0.0
    }

    fn dirichlet_gradient(&self, _: Point) -> Point {
        [0.0, 0.0]
    }
}
