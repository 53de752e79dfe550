//! Truncated bivariate Taylor arithmetic.
//!
//! A [`Jet`] of order `N` stores the Taylor coefficients
//! `c_{jk} = D_x^j D_y^k f(x0) / (j! k!)` for `j + k <= N`. Arithmetic on jets
//! propagates all partial derivatives up to order `N` at once; this is
//! forward-mode differentiation with bivariate dual numbers carried to
//! arbitrary order.

use std::ops::{Add, Mul, Neg, Sub};

/// Position of the monomial `x^j y^k` in the graded ordering used
/// throughout the crate: by total degree, then by power of `y`.
#[inline]
pub fn monomial_index(j: usize, k: usize) -> usize {
    let n = j + k;
    n * (n + 1) / 2 + k
}

/// Number of monomials of total degree `<= n`.
#[inline]
pub fn monomial_count(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Exponent pairs `(j, k)` in graded order for total degree `<= n`.
pub fn monomial_exponents(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(monomial_count(n));
    for deg in 0..=n {
        for k in 0..=deg {
            out.push((deg - k, k));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![0.0; monomial_count(order)],
        }
    }

    pub fn constant(order: usize, value: f64) -> Self {
        let mut jet = Self::zero(order);
        jet.coeffs[0] = value;
        jet
    }

    /// The coordinate `x` expanded about `x0`.
    pub fn var_x(order: usize, x0: f64) -> Self {
        let mut jet = Self::constant(order, x0);
        if order >= 1 {
            jet.coeffs[monomial_index(1, 0)] = 1.0;
        }
        jet
    }

    pub fn var_y(order: usize, y0: f64) -> Self {
        let mut jet = Self::constant(order, y0);
        if order >= 1 {
            jet.coeffs[monomial_index(0, 1)] = 1.0;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `dx^j dy^k`; zero beyond the truncation order.
    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        if j + k > self.order {
            0.0
        } else {
            self.coeffs[monomial_index(j, k)]
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The partial derivative `D_x^j D_y^k` at the expansion point.
    pub fn derivative(&self, j: usize, k: usize) -> f64 {
        self.coeff(j, k) * factorial(j) * factorial(k)
    }

    /// Jet of `D_x^a D_y^b f`, of order `N - a - b`.
    pub fn differentiate(&self, a: usize, b: usize) -> Jet {
        assert!(a + b <= self.order, "differentiation beyond jet order");
        let order = self.order - a - b;
        let mut out = Jet::zero(order);
        for (j, k) in monomial_exponents(order) {
            let scale = falling(j + a, a) * falling(k + b, b);
            out.coeffs[monomial_index(j, k)] = scale * self.coeff(j + a, k + b);
        }
        out
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            order,
            coeffs: self.coeffs[..monomial_count(order)].to_vec(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(self.order, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order.min(other.order);
        let coeffs = (0..monomial_count(order))
            .map(|i| f(self.coeffs[i], other.coeffs[i]))
            .collect();
        Jet { order, coeffs }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `n (n-1) ... (n-m+1)`.
fn falling(n: usize, m: usize) -> f64 {
    (0..m).map(|i| (n - i) as f64).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for (j1, k1) in monomial_exponents(order) {
            let a = self.coeffs[monomial_index(j1, k1)];
            if a == 0.0 {
                continue;
            }
            let rest = order - j1 - k1;
            for (j2, k2) in monomial_exponents(rest) {
                out.coeffs[monomial_index(j1 + j2, k1 + k2)] +=
                    a * rhs.coeffs[monomial_index(j2, k2)];
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
