//! Two-dimensional cell complexes with pinch points.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    /// Where two sheets of the surface touch.
    Pinch,
    /// Critical point of the time function on a critical level.
    Critical,
    /// Placed on a closed level curve that has no other vertex.
    Marker,
    Birth,
    Death,
    Infinity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vertex {
    /// Standard coordinates, `None` for the point at infinity.
    pub point: Option<[f64; 4]>,
    pub kind: VertexKind,
    pub pinch: bool,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Representative arc on the unit sphere of `R^5`; empty for abstract edges.
    #[serde(skip)]
    pub arc: Vec<[f64; 5]>,
    pub seam: bool,
}

/// An oriented edge: `(edge, forward)`.
pub type Side = (usize, bool);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Face {
    pub boundary: Vec<Side>,
    /// Vertex the face is attached to when its boundary is empty.
    pub anchor: Option<usize>,
    pub label: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CellComplex {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
}

impl CellComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: Vertex) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, arc: Vec<[f64; 5]>, seam: bool) -> Result<usize> {
        if a >= self.vertices.len() || b >= self.vertices.len() {
            return Err(Error::Topology(format!("edge endpoint out of range ({a}, {b})")));
        }
        self.edges.push(Edge { a, b, arc, seam });
        Ok(self.edges.len() - 1)
    }

    fn tail(&self, s: Side) -> usize {
        let e = &self.edges[s.0];
        if s.1 {
            e.a
        } else {
            e.b
        }
    }

    fn head(&self, s: Side) -> usize {
        let e = &self.edges[s.0];
        if s.1 {
            e.b
        } else {
            e.a
        }
    }

    /// Add a face after checking its boundary is a closed edge cycle.
    pub fn add_face(&mut self, boundary: Vec<Side>, anchor: Option<usize>, label: impl Into<String>) -> Result<usize> {
        if boundary.is_empty() {
            if anchor.is_none_or(|v| v >= self.vertices.len()) {
                return Err(Error::Topology("face without boundary needs an anchor vertex".into()));
            }
        } else {
            if boundary.iter().any(|s| s.0 >= self.edges.len()) {
                return Err(Error::Topology("face boundary uses an unknown edge".into()));
            }
            let n = boundary.len();
            for i in 0..n {
                if self.head(boundary[i]) != self.tail(boundary[(i + 1) % n]) {
                    return Err(Error::Topology(format!("face boundary breaks after position {i}")));
                }
            }
        }
        self.faces.push(Face { boundary, anchor, label: label.into() });
        Ok(self.faces.len() - 1)
    }

    pub fn pinch_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].pinch).collect()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.vertices.len(), self.edges.len(), self.faces.len())
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let mut uf = UnionFind::new(self.vertices.len());
        for e in &self.edges {
            uf.union(e.a, e.b);
        }
        for f in &self.faces {
            if let Some(a) = f.anchor {
                for s in &f.boundary {
                    uf.union(a, self.tail(*s));
                }
            }
        }
        let r = uf.find(0);
        (0..self.vertices.len()).all(|v| uf.find(v) == r)
    }

    /// The link of every vertex as a graph on edge ends, split into components.
    ///
    /// Nodes are `(edge, end)` with `end` 0 at the tail and 1 at the head;
    /// each face corner contributes one link edge.
    fn links(&self) -> Result<Vec<Link>> {
        let mut nodes: Vec<Vec<(usize, u8)>> = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            nodes[e.a].push((i, 0));
            nodes[e.b].push((i, 1));
        }
        let mut corners: Vec<Vec<((usize, u8), (usize, u8), usize)>> = vec![Vec::new(); self.vertices.len()];
        let mut isolated = vec![0usize; self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            if f.boundary.is_empty() {
                isolated[f.anchor.expect("checked on insertion")] += 1;
                continue;
            }
            let n = f.boundary.len();
            for i in 0..n {
                let (s, t) = (f.boundary[i], f.boundary[(i + 1) % n]);
                let v = self.head(s);
                let a = (s.0, if s.1 { 1 } else { 0 });
                let b = (t.0, if t.1 { 0 } else { 1 });
                corners[v].push((a, b, fi));
            }
        }
        let mut out = Vec::with_capacity(self.vertices.len());
        for v in 0..self.vertices.len() {
            let idx: HashMap<(usize, u8), usize> = nodes[v].iter().enumerate().map(|(i, n)| (*n, i)).collect();
            let mut deg = vec![0usize; nodes[v].len()];
            let mut uf = UnionFind::new(nodes[v].len());
            for (a, b, _) in &corners[v] {
                let (ia, ib) = (idx[a], idx[b]);
                deg[ia] += 1;
                deg[ib] += 1;
                uf.union(ia, ib);
            }
            let manifold = deg.iter().all(|&d| d == 2);
            let mut comp_of = vec![0usize; nodes[v].len()];
            let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
            for i in 0..nodes[v].len() {
                let r = uf.find(i);
                let next = roots.len();
                comp_of[i] = *roots.entry(r).or_insert(next);
            }
            let cycles = roots.len() + isolated[v];
            let node_cycle = nodes[v].iter().enumerate().map(|(i, n)| (*n, comp_of[i])).collect();
            out.push(Link { manifold, cycles, node_cycle, first_isolated: roots.len() });
        }
        Ok(out)
    }

    /// Whether the faces can be oriented so every interior edge is used once
    /// in each direction. Returns a verdict per face-connected class.
    fn orientation_classes(&self) -> (Vec<usize>, Vec<bool>) {
        let nf = self.faces.len();
        let mut uses: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.edges.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for s in &f.boundary {
                uses[s.0].push((fi, s.1));
            }
        }
        let mut sign = vec![0i8; nf];
        let mut class = vec![usize::MAX; nf];
        let mut ok = Vec::new();
        for start in 0..nf {
            if sign[start] != 0 {
                continue;
            }
            let c = ok.len();
            ok.push(true);
            sign[start] = 1;
            class[start] = c;
            let mut stack = vec![start];
            while let Some(f) = stack.pop() {
                for s in &self.faces[f].boundary {
                    let u = &uses[s.0];
                    if u.len() != 2 {
                        continue;
                    }
                    let d = |x: bool| if x { 1i8 } else { -1 };
                    let (g, dg, df) = if u[0].0 == f && u[0].1 == s.1 {
                        (u[1].0, d(u[1].1), d(u[0].1))
                    } else {
                        (u[0].0, d(u[0].1), d(u[1].1))
                    };
                    // need sign[f] * df == -sign[g] * dg
                    let want = -sign[f] * df * dg;
                    if sign[g] == 0 {
                        sign[g] = want;
                        class[g] = c;
                        stack.push(g);
                    } else if sign[g] != want {
                        ok[c] = false;
                    }
                }
            }
        }
        (class, ok)
    }
}

struct Link {
    manifold: bool,
    /// Connected components of the link, counting faces attached at the vertex alone.
    cycles: usize,
    node_cycle: HashMap<(usize, u8), usize>,
    first_isolated: usize,
}

pub fn euler_characteristic(c: &CellComplex) -> i64 {
    let (v, e, f) = c.counts();
    v as i64 - e as i64 + f as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub chi: i64,
    pub boundaries: usize,
    /// `(2 - chi - b) / 2` when that is a non-negative integer.
    pub genus: Option<i64>,
    pub orientable: bool,
    pub faces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchReport {
    pub pinch_vertices: usize,
    /// Local sheets at each pinch vertex, in vertex order.
    pub sheets_per_pinch: Vec<usize>,
    pub components_with_pinches: usize,
    pub components_without: usize,
    pub components: Vec<ComponentReport>,
    /// Non-pinch vertices whose link is not a single circle.
    pub irregular_vertices: Vec<usize>,
}

/// Cut the complex open at its pinch vertices and describe the pieces.
///
/// A pinch vertex is replaced by one copy per circle of its link; each copy
/// becomes a boundary circle of the piece it belongs to.
pub fn pinch_analysis(c: &CellComplex) -> Result<PinchReport> {
    let links = c.links()?;
    let pinches = c.pinch_vertices();
    let mut irregular = Vec::new();
    for (v, l) in links.iter().enumerate() {
        if !l.manifold {
            return Err(Error::Topology(format!("link of vertex {v} ({}) is not a union of circles", c.vertices[v].label)));
        }
        if !c.vertices[v].pinch && l.cycles != 1 {
            irregular.push(v);
        }
    }
    // elements: faces, edges, non-pinch vertices, pinch link circles
    let nf = c.faces.len();
    let ne = c.edges.len();
    let nv = c.vertices.len();
    let mut circle_base = vec![usize::MAX; nv];
    let mut total = nf + ne + nv;
    for &p in &pinches {
        circle_base[p] = total;
        total += links[p].cycles;
    }
    let mut uf = UnionFind::new(total);
    let edge_el = |e: usize| nf + e;
    let vert_el = |v: usize| nf + ne + v;
    for (fi, f) in c.faces.iter().enumerate() {
        for s in &f.boundary {
            uf.union(fi, edge_el(s.0));
        }
        if f.boundary.is_empty() {
            let a = f.anchor.expect("checked on insertion");
            if c.vertices[a].pinch {
                // attach to the first isolated circle not yet claimed
                let l = &links[a];
                let k = c.faces[..fi].iter().filter(|g| g.boundary.is_empty() && g.anchor == Some(a)).count();
                uf.union(fi, circle_base[a] + l.first_isolated + k);
            } else {
                uf.union(fi, vert_el(a));
            }
        }
    }
    for (ei, e) in c.edges.iter().enumerate() {
        for (v, end) in [(e.a, 0u8), (e.b, 1u8)] {
            if c.vertices[v].pinch {
                uf.union(edge_el(ei), circle_base[v] + links[v].node_cycle[&(ei, end)]);
            } else {
                uf.union(edge_el(ei), vert_el(v));
            }
        }
    }
    let (face_class, class_ok) = c.orientation_classes();
    let mut comps: BTreeMap<usize, (i64, usize, usize, bool)> = BTreeMap::new();
    for fi in 0..nf {
        let e = comps.entry(uf.find(fi)).or_insert((0, 0, 0, true));
        e.0 += 1;
        e.2 += 1;
        e.3 &= class_ok[face_class[fi]];
    }
    for ei in 0..ne {
        comps.entry(uf.find(edge_el(ei))).or_insert((0, 0, 0, true)).0 -= 1;
    }
    for v in 0..nv {
        if !c.vertices[v].pinch {
            comps.entry(uf.find(vert_el(v))).or_insert((0, 0, 0, true)).0 += 1;
        }
    }
    for &p in &pinches {
        for k in 0..links[p].cycles {
            comps.entry(uf.find(circle_base[p] + k)).or_insert((0, 0, 0, true)).1 += 1;
        }
    }
    let components: Vec<ComponentReport> = comps
        .values()
        .map(|&(chi, b, faces, orientable)| {
            let g2 = 2 - chi - b as i64;
            let genus = (g2 >= 0 && g2 % 2 == 0 && orientable).then_some(g2 / 2);
            ComponentReport { chi, boundaries: b, genus, orientable, faces }
        })
        .collect();
    let with = components.iter().filter(|c| c.boundaries > 0).count();
    Ok(PinchReport {
        pinch_vertices: pinches.len(),
        sheets_per_pinch: pinches.iter().map(|&p| links[p].cycles).collect(),
        components_with_pinches: with,
        components_without: components.len() - with,
        components,
        irregular_vertices: irregular,
    })
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertex(pinch: bool) -> Vertex {
        Vertex { point: None, kind: if pinch { VertexKind::Pinch } else { VertexKind::Critical }, pinch, label: String::new() }
    }

    fn torus() -> CellComplex {
        let mut c = CellComplex::new();
        let v = c.add_vertex(vertex(false));
        let a = c.add_edge(v, v, vec![], false).unwrap();
        let b = c.add_edge(v, v, vec![], false).unwrap();
        c.add_face(vec![(a, true), (b, true), (a, false), (b, false)], None, "T").unwrap();
        c
    }

    fn sphere() -> CellComplex {
        let mut c = CellComplex::new();
        let n = c.add_vertex(vertex(false));
        let s = c.add_vertex(vertex(false));
        let e1 = c.add_edge(n, s, vec![], false).unwrap();
        let e2 = c.add_edge(n, s, vec![], false).unwrap();
        c.add_face(vec![(e1, true), (e2, false)], None, "A").unwrap();
        c.add_face(vec![(e2, true), (e1, false)], None, "B").unwrap();
        c
    }

    #[test]
    fn euler_examples() {
        assert_eq!(torus().counts(), (1, 2, 1));
        assert_eq!(euler_characteristic(&torus()), 0);
        assert_eq!(sphere().counts(), (2, 2, 2));
        assert_eq!(euler_characteristic(&sphere()), 2);
    }

    #[test]
    fn open_boundary_is_rejected() {
        let mut c = CellComplex::new();
        let a = c.add_vertex(vertex(false));
        let b = c.add_vertex(vertex(false));
        let e = c.add_edge(a, b, vec![], false).unwrap();
        assert!(c.add_face(vec![(e, true)], None, "bad").is_err());
    }

    #[test]
    fn sphere_without_pinches() {
        let r = pinch_analysis(&sphere()).unwrap();
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].chi, 2);
        assert_eq!(r.components[0].genus, Some(0));
        assert!(r.components[0].orientable);
        assert!(r.irregular_vertices.is_empty());
    }

    #[test]
    fn torus_genus_one() {
        let r = pinch_analysis(&torus()).unwrap();
        assert_eq!(r.components[0].chi, 0);
        assert_eq!(r.components[0].genus, Some(1));
    }

    #[test]
    fn projective_plane_is_not_orientable() {
        let mut c = CellComplex::new();
        let p = c.add_vertex(vertex(false));
        let q = c.add_vertex(vertex(false));
        let a = c.add_edge(p, q, vec![], false).unwrap();
        let b = c.add_edge(q, p, vec![], false).unwrap();
        c.add_face(vec![(a, true), (b, true), (a, true), (b, true)], None, "RP2").unwrap();
        let r = pinch_analysis(&c).unwrap();
        assert!(!r.components[0].orientable);
        assert_eq!(r.components[0].genus, None);
        assert_eq!(euler_characteristic(&c), 1);
    }

    #[test]
    fn two_spheres_glued_at_a_point() {
        // north poles identified: one pinch with two sheets
        let mut c = CellComplex::new();
        let n = c.add_vertex(vertex(true));
        for _ in 0..2 {
            let s = c.add_vertex(vertex(false));
            let e1 = c.add_edge(n, s, vec![], false).unwrap();
            let e2 = c.add_edge(n, s, vec![], false).unwrap();
            c.add_face(vec![(e1, true), (e2, false)], None, "A").unwrap();
            c.add_face(vec![(e2, true), (e1, false)], None, "B").unwrap();
        }
        assert!(c.is_connected());
        assert_eq!(euler_characteristic(&c), 3);
        let r = pinch_analysis(&c).unwrap();
        assert_eq!(r.sheets_per_pinch, vec![2]);
        assert_eq!(r.components.len(), 2);
        for comp in &r.components {
            assert_eq!((comp.chi, comp.boundaries, comp.genus), (1, 1, Some(0)));
        }
    }
}
