//! Triangular meshes of the Tricomi domain.
//!
//! Elements are stored counter-clockwise. Facets are classified as interior
//! or as pieces of Γ0, Γ1, Γ2; facets on Γ1 and Γ2 follow the exact
//! characteristic between their endpoints. Interior facets are straight.

mod io;
pub mod quality;

pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use quality::{triangle_quality, MeshQualityReport};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySide, CharacteristicArc, DomainSpec, Point};
use crate::quadrature::{self, FacetRule, QuadRule};

/// Relative tolerance for collinearity when matching hanging-node edges.
const HANGING_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FacetClass {
    Interior,
    Boundary(BoundarySide),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjacency {
    /// The normal of the facet points out of `plus`.
    Interior { plus: usize, minus: usize },
    Boundary { element: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub class: FacetClass,
    pub adjacency: Adjacency,
    /// Chord length.
    pub h: f64,
}

impl Facet {
    pub fn is_curved(&self) -> bool {
        matches!(self.class, FacetClass::Boundary(s) if s.is_characteristic())
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.class, FacetClass::Boundary(s) if s.is_dirichlet())
    }
}

/// Shape of a facet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FacetShape {
    Segment { a: Point, b: Point, normal: Point },
    Arc(CharacteristicArc),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetGeometry {
    pub shape: FacetShape,
    pub chord: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    spec: DomainSpec,
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<(usize, usize, BoundarySide)>,
    facets: Vec<Facet>,
    element_facets: Vec<Vec<usize>>,
    /// Local edge `i` (from vertex `i` to `i + 1`) that lies on Γ1 or Γ2.
    curved_edge: Vec<Option<(usize, BoundarySide)>>,
    h_elem: Vec<f64>,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh {
    /// Builds a mesh from raw connectivity, orienting elements
    /// counter-clockwise, classifying facets and validating topology.
    pub fn from_parts(
        spec: DomainSpec,
        vertices: Vec<Point>,
        mut elements: Vec<[usize; 3]>,
        boundary: Vec<(usize, usize, BoundarySide)>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (e, tri) in elements.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(Error::Mesh(format!(
                        "element {e} references vertex {v} (only {nv} vertices)"
                    )));
                }
                used[v] = true;
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            let scale = dist(vertices[tri[0]], vertices[tri[1]])
                .max(dist(vertices[tri[1]], vertices[tri[2]]))
                .max(dist(vertices[tri[2]], vertices[tri[0]]));
            if !(area.abs() > 1e-14 * scale * scale) {
                return Err(Error::DegenerateElement(e));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::DanglingVertex(v));
        }

        let mut tags: BTreeMap<(usize, usize), BoundarySide> = BTreeMap::new();
        for &(a, b, side) in &boundary {
            if a >= nv || b >= nv {
                return Err(Error::Mesh(format!("boundary edge ({a}, {b}) out of range")));
            }
            if tags.insert(key(a, b), side).is_some() {
                return Err(Error::Mesh(format!("boundary edge ({a}, {b}) tagged twice")));
            }
            if side.is_characteristic() {
                for v in [a, b] {
                    if !spec.on_boundary(side, vertices[v]) {
                        return Err(Error::Mesh(format!(
                            "vertex {v} of a {} edge is off the characteristic",
                            side.tag()
                        )));
                    }
                }
            }
        }

        let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (e, tri) in elements.iter().enumerate() {
            for i in 0..3 {
                edges
                    .entry(key(tri[i], tri[(i + 1) % 3]))
                    .or_default()
                    .push((e, i));
            }
        }

        let mut facets = Vec::new();
        let mut curved_edge = vec![None; elements.len()];
        let mut unmatched = Vec::new();
        for (&(a, b), owners) in &edges {
            match owners.as_slice() {
                [(e1, _), (e2, _)] => {
                    if tags.contains_key(&(a, b)) {
                        return Err(Error::Mesh(format!(
                            "edge ({a}, {b}) is tagged as boundary but shared by two elements"
                        )));
                    }
                    facets.push(Facet {
                        vertices: [a, b],
                        class: FacetClass::Interior,
                        adjacency: Adjacency::Interior { plus: *e1, minus: *e2 },
                        h: dist(vertices[a], vertices[b]),
                    });
                }
                [(e, i)] => match tags.get(&(a, b)) {
                    Some(&side) => {
                        if side.is_characteristic() {
                            if curved_edge[*e].is_some() {
                                return Err(Error::Mesh(format!(
                                    "element {e} has more than one characteristic edge"
                                )));
                            }
                            curved_edge[*e] = Some((*i, side));
                        }
                        let tri = elements[*e];
                        facets.push(Facet {
                            vertices: [tri[*i], tri[(*i + 1) % 3]],
                            class: FacetClass::Boundary(side),
                            adjacency: Adjacency::Boundary { element: *e },
                            h: dist(vertices[a], vertices[b]),
                        });
                    }
                    None => unmatched.push((a, b, *e)),
                },
                _ => return Err(Error::NonManifoldFacet(a, b, owners.len())),
            }
        }
        for &(a, b, _) in &boundary {
            if !edges.contains_key(&key(a, b)) {
                return Err(Error::Mesh(format!(
                    "boundary edge ({a}, {b}) is not an element edge"
                )));
            }
        }
        facets.extend(match_hanging_edges(&vertices, &unmatched)?);

        let mut element_facets = vec![Vec::new(); elements.len()];
        for (f, facet) in facets.iter().enumerate() {
            match facet.adjacency {
                Adjacency::Interior { plus, minus } => {
                    element_facets[plus].push(f);
                    element_facets[minus].push(f);
                }
                Adjacency::Boundary { element } => element_facets[element].push(f),
            }
        }
        let h_elem = elements
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| vertices[v]);
                dist(a, b).max(dist(b, c)).max(dist(c, a))
            })
            .collect();

        Ok(Self {
            spec,
            vertices,
            elements,
            boundary,
            facets,
            element_facets,
            curved_edge,
            h_elem,
        })
    }

    /// The four-triangle mesh with vertices `(-1,0)`, `(1,0)`, `(0,d)`,
    /// `(0,y_c)`, `(0,0)`.
    pub fn builtin_coarse(spec: DomainSpec) -> Self {
        let vertices = vec![[-1.0, 0.0], [1.0, 0.0], [0.0, spec.d], [0.0, spec.y_c()], [0.0, 0.0]];
        let elements = vec![[0, 4, 2], [4, 1, 2], [0, 3, 4], [3, 1, 4]];
        let boundary = vec![
            (0, 2, BoundarySide::Gamma0),
            (2, 1, BoundarySide::Gamma0),
            (0, 3, BoundarySide::Gamma1),
            (3, 1, BoundarySide::Gamma2),
        ];
        Self::from_parts(spec, vertices, elements, boundary).expect("coarse mesh is valid")
    }

    /// Builtin mesh after `level` uniform refinements.
    pub fn builtin(spec: DomainSpec, level: usize) -> Self {
        let mut mesh = Self::builtin_coarse(spec);
        for _ in 0..level {
            mesh = mesh.refine();
        }
        mesh
    }

    /// Red refinement: every triangle is split into four through its edge
    /// midpoints. Midpoints of characteristic edges are moved onto the curve
    /// at the mean ordinate of the endpoints.
    pub fn refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let tags: BTreeMap<(usize, usize), BoundarySide> = self
            .boundary
            .iter()
            .map(|&(a, b, s)| (key(a, b), s))
            .collect();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *midpoints.entry(key(a, b)).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                let p = match tags.get(&key(a, b)) {
                    Some(&side) if side.is_characteristic() => {
                        let y = 0.5 * (pa[1] + pb[1]);
                        let x = self
                            .spec
                            .characteristic_x(side, y)
                            .expect("characteristic vertices lie in range");
                        [x, y]
                    }
                    _ => [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                };
                vertices.push(p);
                vertices.len() - 1
            })
        };
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        for &[v0, v1, v2] in &self.elements {
            let m01 = midpoint(v0, v1, &mut vertices);
            let m12 = midpoint(v1, v2, &mut vertices);
            let m20 = midpoint(v2, v0, &mut vertices);
            elements.push([v0, m01, m20]);
            elements.push([m01, v1, m12]);
            elements.push([m20, m12, v2]);
            elements.push([m01, m12, m20]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for &(a, b, side) in &self.boundary {
            let m = midpoint(a, b, &mut vertices);
            boundary.push((a, m, side));
            boundary.push((m, b, side));
        }
        Self::from_parts(self.spec, vertices, elements, boundary)
            .expect("refinement preserves validity")
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_edges(&self) -> &[(usize, usize, BoundarySide)] {
        &self.boundary
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_facets(&self, e: usize) -> &[usize] {
        &self.element_facets[e]
    }

    pub fn element_vertices(&self, e: usize) -> [Point; 3] {
        self.elements[e].map(|v| self.vertices[v])
    }

    /// Vertex average, used as the expansion point of local bases.
    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_vertices(e);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Diameter of the vertex set.
    pub fn h_element(&self, e: usize) -> f64 {
        self.h_elem[e]
    }

    pub fn h_max(&self) -> f64 {
        self.h_elem.iter().cloned().fold(0.0, f64::max)
    }

    pub fn curved_edge(&self, e: usize) -> Option<(usize, BoundarySide)> {
        self.curved_edge[e]
    }

    /// Quadrature rule on element `e` (exact geometry for curved elements).
    pub fn element_rule(&self, e: usize, order: usize) -> Result<QuadRule> {
        let tri = self.element_vertices(e);
        match self.curved_edge[e] {
            None => quadrature::triangle_rule(tri, order),
            Some((i, side)) => {
                let arc = CharacteristicArc::between(side, tri[i], tri[(i + 1) % 3]);
                quadrature::curved_triangle_rule(tri[(i + 2) % 3], &arc, order)
            }
        }
    }

    /// Sum of the element areas, integrated over the exact geometry.
    pub fn area(&self) -> Result<f64> {
        (0..self.n_elements())
            .map(|e| self.element_rule(e, 1).map(|r| r.measure()))
            .sum()
    }

    pub fn facet_geometry(&self, f: usize) -> FacetGeometry {
        let facet = &self.facets[f];
        let [a, b] = facet.vertices.map(|v| self.vertices[v]);
        let shape = match facet.class {
            FacetClass::Boundary(side) if side.is_characteristic() => {
                FacetShape::Arc(CharacteristicArc::between(side, a, b))
            }
            _ => {
                let owner = match facet.adjacency {
                    Adjacency::Interior { plus, .. } => plus,
                    Adjacency::Boundary { element } => element,
                };
                FacetShape::Segment {
                    a,
                    b,
                    normal: normal_from(a, b, self.centroid(owner)),
                }
            }
        };
        FacetGeometry { shape, chord: facet.h }
    }

    /// Facet quadrature with the unit normal at each point; on interior
    /// facets the normal points out of the `plus` element.
    pub fn facet_rule(&self, f: usize, order: usize) -> Result<FacetRule> {
        match self.facet_geometry(f).shape {
            FacetShape::Segment { a, b, normal } => {
                let rule = quadrature::segment_rule(a, b, order)?;
                let normals = vec![normal; rule.len()];
                Ok(FacetRule { rule, normals })
            }
            FacetShape::Arc(arc) => {
                let rule = quadrature::arc_rule(&arc, order)?;
                let normals = rule
                    .points
                    .iter()
                    .map(|&p| self.spec.boundary_normal(arc.side, p))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FacetRule { rule, normals })
            }
        }
    }

    pub fn quality(&self) -> Result<MeshQualityReport> {
        quality::quality(self)
    }

    pub fn count_facets(&self, class: FacetClass) -> usize {
        self.facets.iter().filter(|f| f.class == class).count()
    }
}

/// Unit normal of the segment `a`-`b` pointing away from `inside`.
pub fn normal_from(a: Point, b: Point, inside: Point) -> Point {
    let t = [b[0] - a[0], b[1] - a[1]];
    let len = t[0].hypot(t[1]);
    let mut n = [t[1] / len, -t[0] / len];
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if n[0] * (mid[0] - inside[0]) + n[1] * (mid[1] - inside[1]) < 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

/// Pairs untagged single-owner edges across hanging nodes: a long edge is
/// matched with the collinear sub-edges that tile it.
fn match_hanging_edges(vertices: &[Point], unmatched: &[(usize, usize, usize)]) -> Result<Vec<Facet>> {
    let mut used = vec![false; unmatched.len()];
    let mut facets = Vec::new();
    for (i, &(a, b, e_long)) in unmatched.iter().enumerate() {
        let (pa, pb) = (vertices[a], vertices[b]);
        let len = dist(pa, pb);
        let param = |p: Point| -> Option<f64> {
            let t = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / (len * len);
            let off = signed_area(pa, pb, p).abs() * 2.0 / len;
            (off <= HANGING_TOL * len && t >= -HANGING_TOL && t <= 1.0 + HANGING_TOL).then_some(t)
        };
        let subs: Vec<usize> = unmatched
            .iter()
            .enumerate()
            .filter(|&(j, &(c, d, _))| {
                j != i && !used[j] && dist(vertices[c], vertices[d]) < len * (1.0 - HANGING_TOL)
                    && param(vertices[c]).is_some()
                    && param(vertices[d]).is_some()
            })
            .map(|(j, _)| j)
            .collect();
        let covered: f64 = subs
            .iter()
            .map(|&j| dist(vertices[unmatched[j].0], vertices[unmatched[j].1]))
            .sum();
        if subs.len() < 2 || (covered - len).abs() > HANGING_TOL * len {
            continue;
        }
        used[i] = true;
        for j in subs {
            used[j] = true;
            let (c, d, e_short) = unmatched[j];
            facets.push(Facet {
                vertices: [c, d],
                class: FacetClass::Interior,
                adjacency: Adjacency::Interior { plus: e_short, minus: e_long },
                h: dist(vertices[c], vertices[d]),
            });
        }
    }
    if let Some(k) = used.iter().position(|u| !u) {
        let (a, b, _) = unmatched[k];
        return Err(Error::UntaggedBoundary(a, b));
    }
    Ok(facets)
}
