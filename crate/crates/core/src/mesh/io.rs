//! Text format:
//!
//! ```text
//! tricomi-mesh v1
//! VERTICES
//! <n>
//! <x> <y>
//! ELEMENTS
//! <n>
//! <v0> <v1> <v2>
//! BOUNDARY
//! <n>
//! <v0> <v1> <gamma0|gamma1|gamma2>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Interior facets are
//! inferred from the element connectivity.

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};
use crate::geometry::{BoundarySide, DomainSpec};

const HEADER: &str = "tricomi-mesh v1";

pub fn load_mesh(path: impl AsRef<Path>, spec: DomainSpec) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, spec)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "VERTICES\n{}", mesh.vertices().len()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:.17e} {:.17e}", p[0], p[1]).unwrap();
    }
    writeln!(out, "ELEMENTS\n{}", mesh.n_elements()).unwrap();
    for t in mesh.elements() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "BOUNDARY\n{}", mesh.boundary_edges().len()).unwrap();
    for &(a, b, side) in mesh.boundary_edges() {
        writeln!(out, "{a} {b} {}", side.tag()).unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self { inner: it.peekable(), last: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(Error::Parse {
                line: self.last + 1,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        let (n, l) = self.next(keyword)?;
        if l != keyword {
            return Err(Error::Parse { line: n, message: format!("expected `{keyword}`, found `{l}`") });
        }
        Ok(())
    }

    fn count(&mut self) -> Result<usize> {
        let (n, l) = self.next("a count")?;
        l.parse().map_err(|_| Error::Parse { line: n, message: format!("invalid count `{l}`") })
    }
}

fn fields<'a>(n: usize, l: &'a str, expected: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = l.split_whitespace().collect();
    if f.len() != expected {
        return Err(Error::Parse {
            line: n,
            message: format!("expected {expected} fields, found {}", f.len()),
        });
    }
    Ok(f)
}

fn parse<T: std::str::FromStr>(n: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line: n, message: format!("invalid value `{s}`") })
}

pub fn parse_mesh(text: &str, spec: DomainSpec) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    lines.expect(HEADER)?;

    lines.expect("VERTICES")?;
    let nv = lines.count()?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next("a vertex")?;
        let f = fields(n, l, 2)?;
        let p = [parse::<f64>(n, f[0])?, parse::<f64>(n, f[1])?];
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::Parse { line: n, message: "non-finite coordinate".into() });
        }
        vertices.push(p);
    }

    lines.expect("ELEMENTS")?;
    let ne = lines.count()?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (n, l) = lines.next("an element")?;
        let f = fields(n, l, 3)?;
        let t = [parse::<usize>(n, f[0])?, parse::<usize>(n, f[1])?, parse::<usize>(n, f[2])?];
        if let Some(&v) = t.iter().find(|&&v| v >= nv) {
            return Err(Error::Parse { line: n, message: format!("vertex index {v} out of range") });
        }
        elements.push(t);
    }

    lines.expect("BOUNDARY")?;
    let nb = lines.count()?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (n, l) = lines.next("a boundary edge")?;
        let f = fields(n, l, 3)?;
        let (a, b) = (parse::<usize>(n, f[0])?, parse::<usize>(n, f[1])?);
        let side = BoundarySide::from_tag(f[2])
            .ok_or_else(|| Error::Parse { line: n, message: format!("unknown boundary tag `{}`", f[2]) })?;
        boundary.push((a, b, side));
    }
    if let Ok((n, l)) = lines.next("") {
        return Err(Error::Parse { line: n, message: format!("trailing content `{l}`") });
    }

    Mesh::from_parts(spec, vertices, elements, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> DomainSpec {
        DomainSpec::tricomi(0.5).unwrap()
    }

    #[test]
    fn round_trip_coarse_and_refined() {
        for level in 0..3 {
            let m = Mesh::builtin(spec(), level);
            let back = parse_mesh(&write_mesh(&m), spec()).unwrap();
            assert_eq!(back, m);
            assert_eq!(write_mesh(&back), write_mesh(&m));
        }
    }

    #[test]
    fn non_manifold_file() {
        let text = "tricomi-mesh v1\nVERTICES\n5\n-1 0\n1 0\n0 0.5\n0 -0.5\n0.2 0.2\n\
                    ELEMENTS\n3\n0 1 2\n0 1 3\n0 1 4\nBOUNDARY\n0\n";
        assert!(matches!(parse_mesh(text, spec()), Err(Error::NonManifoldFacet(0, 1, 3))));
    }

    #[test]
    fn untagged_boundary_file() {
        let text = "tricomi-mesh v1\nVERTICES\n3\n-1 0\n1 0\n0 0.5\nELEMENTS\n1\n0 1 2\n\
                    BOUNDARY\n2\n0 2 gamma0\n2 1 gamma0\n";
        assert!(matches!(parse_mesh(text, spec()), Err(Error::UntaggedBoundary(0, 1))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "tricomi-mesh v1\nVERTICES\n1\n0.0 abc\n";
        assert!(matches!(parse_mesh(text, spec()), Err(Error::Parse { line: 4, .. })));
        let text = "tricomi-mesh v2\n";
        assert!(matches!(parse_mesh(text, spec()), Err(Error::Parse { line: 1, .. })));
        let text = "tricomi-mesh v1\nVERTICES\n3\n-1 0\n1 0\n0 0.5\nELEMENTS\n1\n0 1 2\nBOUNDARY\n1\n0 1 gamma9\n";
        assert!(matches!(parse_mesh(text, spec()), Err(Error::Parse { line: 12, .. })));
    }

    #[test]
    fn dangling_vertex_file() {
        let text = "tricomi-mesh v1\nVERTICES\n4\n-1 0\n1 0\n0 0.5\n0 0.1\nELEMENTS\n1\n0 1 2\n\
                    BOUNDARY\n3\n0 1 gamma0\n1 2 gamma0\n2 0 gamma0\n";
        assert!(matches!(parse_mesh(text, spec()), Err(Error::DanglingVertex(3))));
    }
}
