use super::{Adjacency, Mesh};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Shape constants entering the trace inequality and the penalty scalings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQualityReport {
    /// Minimum inradius over diameter.
    pub r_star: f64,
    /// Maximum of `h_T / h_F` over all element-facet pairs.
    pub c_g: f64,
    /// `sqrt(6 / r_star)`.
    pub c_tr: f64,
}

/// Inradius over diameter of a straight triangle; `None` if degenerate.
pub fn triangle_quality(tri: [Point; 3]) -> Option<f64> {
    let [a, b, c] = tri;
    let (ab, bc, ca) = (
        (a[0] - b[0]).hypot(a[1] - b[1]),
        (b[0] - c[0]).hypot(b[1] - c[1]),
        (c[0] - a[0]).hypot(c[1] - a[1]),
    );
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    let diam = ab.max(bc).max(ca);
    if !(area > 1e-14 * diam * diam) {
        return None;
    }
    Some(2.0 * area / (ab + bc + ca) / diam)
}

pub(super) fn quality(mesh: &Mesh) -> Result<MeshQualityReport> {
    let mut r_star = f64::INFINITY;
    for e in 0..mesh.n_elements() {
        let r = triangle_quality(mesh.element_vertices(e)).ok_or(Error::DegenerateElement(e))?;
        r_star = r_star.min(r);
    }
    let mut c_g: f64 = 1.0;
    for f in mesh.facets() {
        let owners = match f.adjacency {
            Adjacency::Interior { plus, minus } => vec![plus, minus],
            Adjacency::Boundary { element } => vec![element],
        };
        for e in owners {
            c_g = c_g.max(mesh.h_element(e) / f.h);
        }
    }
    Ok(MeshQualityReport {
        r_star,
        c_g,
        c_tr: (6.0 / r_star).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn equilateral_ratio() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
        let r = triangle_quality(tri).unwrap();
        assert!((r - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((r - 0.2887).abs() < 1e-4);
    }

    #[test]
    fn coarse_grading_constant() {
        let s = DomainSpec::tricomi(0.5).unwrap();
        let m = Mesh::builtin_coarse(s);
        let q = m.quality().unwrap();
        // Oracle from the coordinates: the hyperbolic triangles have diameter
        // equal to the Γ1/Γ2 chord and shortest edge 1 (along y = 0), the
        // elliptic ones have diameter sqrt(1 + d^2) and shortest edge d.
        let yc = s.y_c();
        let hyp = (1.0 + yc * yc).sqrt() / 1.0f64.min(-yc);
        let ell = (1.0 + s.d * s.d).sqrt() / s.d;
        assert!((q.c_g - hyp.max(ell)).abs() < 1e-14);
        assert!(q.r_star > 0.0 && q.r_star <= 0.5);
        assert!((q.c_tr - (6.0 / q.r_star).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn r_star_bounded_by_half() {
        let s = DomainSpec::tricomi(0.5).unwrap();
        let q = Mesh::builtin(s, 3).quality().unwrap();
        assert!(q.r_star <= 0.5 && q.c_g >= 1.0);
    }
}
