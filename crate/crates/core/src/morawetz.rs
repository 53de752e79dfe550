//! Affine Morawetz multipliers `m = (b, c)` with `b = b0 + b1 x`,
//! `c = c0 + c1 y`, their admissibility conditions on the Tricomi domain
//! and the constants derived from them.

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point};
use crate::mesh::MeshQualityReport;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multiplier {
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    pub c1: f64,
}

impl Default for Multiplier {
    /// `b = -2 + x/2`, `c = 1 + y/4`.
    fn default() -> Self {
        Self { b0: -2.0, b1: 0.5, c0: 1.0, c1: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Validation {
    pub delta: f64,
    pub ok: bool,
    pub violated: Vec<String>,
}

impl Multiplier {
    pub fn new(b0: f64, b1: f64, c0: f64, c1: f64) -> Self {
        Self { b0, b1, c0, c1 }
    }

    /// `(b(x), c(y))`.
    pub fn eval(&self, p: Point) -> (f64, f64) {
        (self.b0 + self.b1 * p[0], self.c0 + self.c1 * p[1])
    }

    /// Checks the positivity, Γ2 and Γ0 conditions for the Tricomi
    /// coefficient. Every constraint is affine or, on Γ2, a cubic in
    /// `s = sqrt(-y)` with one interior critical point, so evaluating at
    /// endpoints and critical points is exact.
    pub fn validate(&self, spec: &DomainSpec) -> Validation {
        let Multiplier { b0, b1, c0, c1 } = *self;
        let (yc, d) = (spec.y_c(), spec.d);
        let mut violated = Vec::new();

        // -K b_x + (K c)_y = (2 c1 - b1) y + c0 on [y_c, d]
        let a2a = ((2.0 * c1 - b1) * yc + c0).min((2.0 * c1 - b1) * d + c0);
        // b_x - c_y
        let a2b = b1 - c1;
        let delta = a2a.min(a2b);
        if !(a2a > 0.0) {
            violated.push(format!("positivity: -K b_x + (K c)_y has minimum {a2a}"));
        }
        if !(a2b > 0.0) {
            violated.push(format!("positivity: b_x - c_y = {a2b}"));
        }

        // b + c sqrt(-K) <= 0 on Γ2, as a function of s = sqrt(-y)
        let g = |s: f64| b0 + b1 - (2.0 / 3.0 * b1 + c1) * s.powi(3) + c0 * s;
        let s_max = (-yc).sqrt();
        let mut candidates = vec![0.0, s_max];
        let cubic = 2.0 / 3.0 * b1 + c1;
        if cubic != 0.0 {
            let s2 = c0 / (3.0 * cubic);
            if s2 > 0.0 && s2.sqrt() < s_max {
                candidates.push(s2.sqrt());
            }
        }
        let a3 = candidates.into_iter().map(g).fold(f64::NEG_INFINITY, f64::max);
        if a3 > 0.0 {
            violated.push(format!("characteristic Γ2: b + c sqrt(-K) reaches {a3}"));
        }

        // m·n >= 0 on the roof, affine on each half
        let roof = |x: f64, sign: f64| (b0 + b1 * x) * d * sign + c0 + c1 * d * (1.0 - x.abs());
        let a4 = [roof(-1.0, -1.0), roof(0.0, -1.0), roof(0.0, 1.0), roof(1.0, 1.0)]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if a4 < 0.0 {
            violated.push(format!("elliptic boundary Γ0: m·n reaches {a4}"));
        }

        Validation { delta, ok: violated.is_empty(), violated }
    }

    /// Largest of the sup-norms of `K b`, `b`, `K c`, `c` over the bounding
    /// rectangle `[-1, 1] x [y_c, d]` of the domain.
    pub fn beta(&self, spec: &DomainSpec) -> f64 {
        let (yc, d) = (spec.y_c(), spec.d);
        let b_max = (self.b0 - self.b1).abs().max((self.b0 + self.b1).abs());
        let mut ys = vec![yc, d];
        if self.c1 != 0.0 {
            let vertex = -self.c0 / (2.0 * self.c1);
            if vertex > yc && vertex < d {
                ys.push(vertex);
            }
        }
        let kb = yc.abs().max(d.abs()) * b_max;
        let c_max = (self.c0 + self.c1 * yc).abs().max((self.c0 + self.c1 * d).abs());
        let kc = ys
            .iter()
            .map(|&y| (spec.k(y) * (self.c0 + self.c1 * y)).abs())
            .fold(0.0, f64::max);
        kb.max(b_max).max(kc).max(c_max)
    }
}

/// A multiplier that passed validation, with its constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Morawetz {
    pub multiplier: Multiplier,
    pub delta: f64,
    pub beta: f64,
}

impl Morawetz {
    pub fn new(multiplier: Multiplier, spec: &DomainSpec) -> Result<Self> {
        let v = multiplier.validate(spec);
        if !v.ok {
            return Err(Error::Multiplier(v.violated.join("; ")));
        }
        Ok(Self {
            multiplier,
            delta: v.delta,
            beta: multiplier.beta(spec),
        })
    }

    pub fn eval(&self, p: Point) -> (f64, f64) {
        self.multiplier.eval(p)
    }

    pub fn b_x(&self) -> f64 {
        self.multiplier.b1
    }

    pub fn c_y(&self) -> f64 {
        self.multiplier.c1
    }

    pub fn constants(&self, quality: &MeshQualityReport, gamma2: f64) -> StabilityConstants {
        StabilityConstants::new(self.beta, self.delta, quality.c_tr, gamma2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityConstants {
    pub beta: f64,
    pub c_tr: f64,
    /// Penalty level above which coercivity is guaranteed.
    pub gamma_star: f64,
    /// Continuity constant.
    pub m_cont: f64,
}

impl StabilityConstants {
    pub fn new(beta: f64, delta: f64, c_tr: f64, gamma2: f64) -> Self {
        Self {
            beta,
            c_tr,
            gamma_star: 288.0 * beta * beta * c_tr * c_tr / delta,
            m_cont: 2f64.sqrt() * beta / delta.sqrt() * (1.0 + c_tr / gamma2.sqrt()) + 1.0,
        }
    }
}

/// Pointwise boundary quadratic forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryForms {
    pub q_n: f64,
    pub q_t: f64,
    pub q_nt: f64,
    /// Symmetric matrix whose quadratic form in the tangent gives `q_t`.
    pub m: [[f64; 2]; 2],
}

impl BoundaryForms {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }
}

/// The forms at a boundary point with coefficient value `k`, multiplier
/// values `(b, c)` and unit normal `n`. With `t = (-n_y, n_x)`,
/// `(W∇v·n)(Mv) - ½(m·n)(K v_x² + v_y²) = ½(v_n² Q_n + v_t² Q_t + 2 v_n v_t Q_nt)`.
pub fn boundary_forms(bc: (f64, f64), k: f64, n: Point) -> BoundaryForms {
    let (b, c) = bc;
    let [nx, ny] = n;
    let t = [-ny, nx];
    let char_form = k * nx * nx + ny * ny;
    let s = b * nx - c * ny;
    let off = b * ny + k * c * nx;
    let m = [[k * s, off], [off, -s]];
    let q_t = t[0] * (m[0][0] * t[0] + m[0][1] * t[1]) + t[1] * (m[1][0] * t[0] + m[1][1] * t[1]);
    BoundaryForms {
        q_n: char_form * (b * nx + c * ny),
        q_t,
        q_nt: char_form * (b * t[0] + c * t[1]),
        m,
    }
}
