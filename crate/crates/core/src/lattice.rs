//! Geometry of the hypercubic lattice and of the planar dual lattice.
//!
//! Vertices are integer points, edges are stored canonically as a base point
//! plus a positive axis. Simulations run on finite axis-aligned [`Window`]s,
//! which assign every vertex a dense index (lexicographic, first coordinate
//! most significant) and every potential edge the slot `index * d + axis`.
//! Slot order therefore coincides with the canonical edge order used to break
//! clock ties.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A vertex of `Z^d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    coords: [i32; MAX_DIM],
}

pub type VertexSet = BTreeSet<Point>;
pub type EdgeSet = BTreeSet<Edge>;

impl Point {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "point dimension must lie in 1..={MAX_DIM}"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            dim: coords.len() as u8,
            coords: c,
        }
    }

    pub fn xy(x: i32, y: i32) -> Self {
        Point::new(&[x, y])
    }

    pub fn origin(dim: usize) -> Self {
        Point::new(&vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim()]
    }

    pub fn coord(&self, axis: usize) -> i32 {
        self.coords()[axis]
    }

    pub fn shifted(&self, axis: usize, delta: i32) -> Point {
        let mut p = *self;
        p.coords[axis] += delta;
        p
    }

    pub fn translated(&self, offset: &Point) -> Point {
        debug_assert_eq!(self.dim, offset.dim);
        let mut p = *self;
        for i in 0..self.dim() {
            p.coords[i] += offset.coords[i];
        }
        p
    }

    /// The `2d` nearest neighbours.
    pub fn neighbors(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.dim()).flat_map(move |a| [self.shifted(a, 1), self.shifted(a, -1)])
    }

    /// The `2d` edges incident to this vertex.
    pub fn incident_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.dim()).flat_map(move |a| [Edge::new(*self, a), Edge::new(self.shifted(a, -1), a)])
    }

    fn l1(&self, other: &Point) -> u64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (i64::from(*a) - i64::from(*b)).unsigned_abs())
            .sum()
    }

    fn linf(&self, other: &Point) -> u64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (i64::from(*a) - i64::from(*b)).unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Graph (L1) distance.
pub fn l1_distance(u: &Point, v: &Point) -> Result<u64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(u.l1(v))
}

/// Graph distance from a point to a finite set; `u64::MAX` for the empty set.
pub fn distance_to_set<'a>(p: &Point, set: impl IntoIterator<Item = &'a Point>) -> u64 {
    set.into_iter().map(|q| p.l1(q)).min().unwrap_or(u64::MAX)
}

/// `inf { δ(x, y) : x ∈ a, y ∈ b }`.
pub fn set_distance(a: &VertexSet, b: &VertexSet) -> u64 {
    a.iter()
        .map(|x| distance_to_set(x, b))
        .min()
        .unwrap_or(u64::MAX)
}

/// An undirected nearest-neighbour edge `{base, base + unit(axis)}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Edge {
    pub base: Point,
    pub axis: u8,
}

impl Edge {
    pub fn new(base: Point, axis: usize) -> Self {
        debug_assert!(axis < base.dim());
        Edge {
            base,
            axis: axis as u8,
        }
    }

    /// Canonical edge joining two adjacent points, if they are adjacent.
    pub fn between(u: Point, v: Point) -> Option<Edge> {
        if u.dim() != v.dim() || u.l1(&v) != 1 {
            return None;
        }
        let axis = (0..u.dim()).find(|&a| u.coord(a) != v.coord(a))?;
        let base = if u.coord(axis) < v.coord(axis) { u } else { v };
        Some(Edge::new(base, axis))
    }

    pub fn endpoints(&self) -> (Point, Point) {
        (self.base, self.base.shifted(self.axis as usize, 1))
    }

    pub fn translated(&self, offset: &Point) -> Edge {
        Edge {
            base: self.base.translated(offset),
            axis: self.axis,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (u, v) = self.endpoints();
        write!(f, "<{u}-{v}>")
    }
}

/// Ball `B_r(Λ)` in graph distance.
pub fn l1_ball(centers: &VertexSet, radius: u32) -> VertexSet {
    let mut seen: HashSet<Point> = centers.iter().copied().collect();
    let mut frontier: Vec<Point> = centers.iter().copied().collect();
    for _ in 0..radius {
        let mut next = Vec::new();
        for p in &frontier {
            for q in p.neighbors() {
                if seen.insert(q) {
                    next.push(q);
                }
            }
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

/// The two region shapes used by the model: graph-distance balls around a
/// set and sup-norm boxes around a point.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    L1Ball { centers: VertexSet, radius: u32 },
    LInfBox { center: Point, radius: u32 },
}

impl Region {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Region::L1Ball { centers, radius } => distance_to_set(p, centers) <= u64::from(*radius),
            Region::LInfBox { center, radius } => {
                p.dim() == center.dim() && center.linf(p) <= u64::from(*radius)
            }
        }
    }

    pub fn members(&self) -> VertexSet {
        match self {
            Region::L1Ball { centers, radius } => l1_ball(centers, *radius),
            Region::LInfBox { center, radius } => {
                Window::cube(*center, *radius).vertices().collect()
            }
        }
    }

    /// Smallest window containing the region.
    pub fn bounding_window(&self) -> Result<Window> {
        match self {
            Region::L1Ball { centers, radius } => {
                let w = Window::bounding(centers.iter())?;
                Ok(w.padded(*radius))
            }
            Region::LInfBox { center, radius } => Ok(Window::cube(*center, *radius)),
        }
    }
}

/// The three boundaries of a finite vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundaries {
    /// `∂Γ`: vertices of Γ with a neighbour outside.
    pub inner: VertexSet,
    /// `∂ˢΓ`: vertices outside Γ with a neighbour inside.
    pub outer: VertexSet,
    /// `∂ᵉΓ`: edges with exactly one endpoint in Γ.
    pub edges: EdgeSet,
}

pub fn boundaries(gamma: &VertexSet) -> Result<Boundaries> {
    if gamma.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut inner = VertexSet::new();
    let mut outer = VertexSet::new();
    let mut edges = EdgeSet::new();
    for p in gamma {
        for q in p.neighbors() {
            if !gamma.contains(&q) {
                inner.insert(*p);
                outer.insert(q);
                edges.insert(Edge::between(*p, q).expect("neighbours are adjacent"));
            }
        }
    }
    Ok(Boundaries {
        inner,
        outer,
        edges,
    })
}

/// `𝓔(Γ)`: edges with both endpoints in Γ.
pub fn edge_set(gamma: &VertexSet) -> EdgeSet {
    let mut out = EdgeSet::new();
    for p in gamma {
        for a in 0..p.dim() {
            let q = p.shifted(a, 1);
            if gamma.contains(&q) {
                out.insert(Edge::new(*p, a));
            }
        }
    }
    out
}

/// A finite axis-aligned box `[lo, hi]` (inclusive) with dense indexing.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Window {
    lo: Vec<i32>,
    hi: Vec<i32>,
    stride: Vec<usize>,
}

impl Window {
    pub fn new(lo: &[i32], hi: &[i32]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                left: lo.len(),
                right: hi.len(),
            });
        }
        if lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(lo.len()));
        }
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidParameter(format!(
                "window corners out of order: {lo:?} > {hi:?}"
            )));
        }
        let d = lo.len();
        let mut stride = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            stride[a] = stride[a + 1] * (hi[a + 1] - lo[a + 1] + 1) as usize;
        }
        Ok(Window {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            stride,
        })
    }

    /// The sup-norm box of the given radius around `center`.
    pub fn cube(center: Point, radius: u32) -> Self {
        let r = radius as i32;
        let lo: Vec<i32> = center.coords().iter().map(|c| c - r).collect();
        let hi: Vec<i32> = center.coords().iter().map(|c| c + r).collect();
        Window::new(&lo, &hi).expect("valid cube")
    }

    /// Bounding box of a nonempty point set.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point>) -> Result<Self> {
        let mut it = points.into_iter();
        let first = it.next().ok_or(Error::EmptySet)?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in it {
            if p.dim() != lo.len() {
                return Err(Error::DimensionMismatch {
                    left: lo.len(),
                    right: p.dim(),
                });
            }
            for (a, c) in p.coords().iter().enumerate() {
                lo[a] = lo[a].min(*c);
                hi[a] = hi[a].max(*c);
            }
        }
        Window::new(&lo, &hi)
    }

    pub fn padded(&self, pad: u32) -> Window {
        let p = pad as i32;
        let lo: Vec<i32> = self.lo.iter().map(|c| c - p).collect();
        let hi: Vec<i32> = self.hi.iter().map(|c| c + p).collect();
        Window::new(&lo, &hi).expect("padding keeps order")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> Point {
        Point::new(&self.lo)
    }

    pub fn hi(&self) -> Point {
        Point::new(&self.hi)
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn vertex_count(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn slot_count(&self) -> usize {
        self.vertex_count() * self.dim()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .enumerate()
                .all(|(a, c)| *c >= self.lo[a] && *c <= self.hi[a])
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        let (u, v) = e.endpoints();
        self.contains(&u) && self.contains(&v)
    }

    /// Whether every point within sup-distance `margin` of `p` lies inside.
    pub fn contains_with_margin(&self, p: &Point, margin: u32) -> bool {
        let m = margin as i32;
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .enumerate()
                .all(|(a, c)| *c - m >= self.lo[a] && *c + m <= self.hi[a])
    }

    /// Vertex on the outer face of the box.
    pub fn on_boundary(&self, p: &Point) -> bool {
        self.contains(p)
            && p.coords()
                .iter()
                .enumerate()
                .any(|(a, c)| *c == self.lo[a] || *c == self.hi[a])
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let stride = &self.stride;
        Some(
            p.coords()
                .iter()
                .enumerate()
                .map(|(a, c)| (c - self.lo[a]) as usize * stride[a])
                .sum(),
        )
    }

    pub fn point_at(&self, index: usize) -> Point {
        let stride = &self.stride;
        let mut c = [0i32; MAX_DIM];
        let mut rest = index;
        for a in 0..self.dim() {
            c[a] = self.lo[a] + (rest / stride[a]) as i32;
            rest %= stride[a];
        }
        Point::new(&c[..self.dim()])
    }

    /// Slot of an edge whose both endpoints lie in the window.
    pub fn slot_of(&self, e: &Edge) -> Option<usize> {
        if !self.contains_edge(e) {
            return None;
        }
        self.index_of(&e.base)
            .map(|i| i * self.dim() + e.axis as usize)
    }

    /// Whether a slot index corresponds to an edge inside the window.
    pub fn slot_is_edge(&self, slot: usize) -> bool {
        let d = self.dim();
        let v = slot / d;
        let a = slot % d;
        let stride = &self.stride;
        ((v / stride[a]) % self.extent(a)) + 1 < self.extent(a)
    }

    pub fn edge_at(&self, slot: usize) -> Option<Edge> {
        if slot >= self.slot_count() || !self.slot_is_edge(slot) {
            return None;
        }
        let d = self.dim();
        Some(Edge::new(self.point_at(slot / d), slot % d))
    }

    /// Vertex indices of both endpoints of a valid slot.
    pub fn slot_endpoints(&self, slot: usize) -> (usize, usize) {
        let d = self.dim();
        let v = slot / d;
        (v, v + self.stride[slot % d])
    }

    /// `(slot, neighbour index)` for every edge at vertex index `v`.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.dim();
        let stride = &self.stride;
        (0..d).flat_map(move |a| {
            let c = (v / stride[a]) % self.extent(a);
            let up = (c + 1 < self.extent(a)).then(|| (v * d + a, v + stride[a]));
            let down = (c > 0).then(|| ((v - stride[a]) * d + a, v - stride[a]));
            up.into_iter().chain(down)
        })
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.vertex_count()).map(|i| self.point_at(i))
    }

    /// Valid edge slots in increasing (canonical) order.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.slot_count()).filter(|s| self.slot_is_edge(*s))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.slots().map(|s| self.edge_at(s).expect("valid slot"))
    }
}

/// A vertex of the dual lattice; `(a, b)` encodes the point `(a + ½, b + ½)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct DualVertex {
    pub a: i32,
    pub b: i32,
}

impl DualVertex {
    pub fn new(a: i32, b: i32) -> Self {
        DualVertex { a, b }
    }

    pub fn neighbors(&self) -> [DualVertex; 4] {
        [
            DualVertex::new(self.a + 1, self.b),
            DualVertex::new(self.a - 1, self.b),
            DualVertex::new(self.a, self.b + 1),
            DualVertex::new(self.a, self.b - 1),
        ]
    }

    /// Sup-norm distance between dual vertices.
    pub fn linf(&self, other: &DualVertex) -> u32 {
        (self.a - other.a)
            .unsigned_abs()
            .max((self.b - other.b).unsigned_abs())
    }
}

/// A dual edge `{base, base + unit(axis)}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct DualEdge {
    pub base: DualVertex,
    pub axis: u8,
}

impl DualEdge {
    pub fn new(base: DualVertex, axis: u8) -> Self {
        DualEdge { base, axis }
    }

    pub fn between(u: DualVertex, v: DualVertex) -> Option<DualEdge> {
        match (v.a - u.a, v.b - u.b) {
            (1, 0) => Some(DualEdge::new(u, 0)),
            (-1, 0) => Some(DualEdge::new(v, 0)),
            (0, 1) => Some(DualEdge::new(u, 1)),
            (0, -1) => Some(DualEdge::new(v, 1)),
            _ => None,
        }
    }

    pub fn endpoints(&self) -> (DualVertex, DualVertex) {
        let b = self.base;
        if self.axis == 0 {
            (b, DualVertex::new(b.a + 1, b.b))
        } else {
            (b, DualVertex::new(b.a, b.b + 1))
        }
    }
}

/// The dual edge crossing a planar primal edge.
///
/// `{(a,b),(a+1,b)}` maps to the dual segment from `(a+½,b−½)` to
/// `(a+½,b+½)`; `{(a,b),(a,b+1)}` maps to the segment from `(a−½,b+½)` to
/// `(a+½,b+½)`.
pub fn dual_of(e: &Edge) -> Result<DualEdge> {
    if e.base.dim() != 2 {
        return Err(Error::NotPlanar(e.base.dim()));
    }
    let (a, b) = (e.base.coord(0), e.base.coord(1));
    Ok(if e.axis == 0 {
        DualEdge::new(DualVertex::new(a, b - 1), 1)
    } else {
        DualEdge::new(DualVertex::new(a - 1, b), 0)
    })
}

/// Inverse of [`dual_of`].
pub fn primal_of(e: &DualEdge) -> Edge {
    let DualVertex { a, b } = e.base;
    if e.axis == 1 {
        Edge::new(Point::xy(a, b + 1), 0)
    } else {
        Edge::new(Point::xy(a + 1, b), 1)
    }
}

/// Breadth-first reachability helper over a generic graph.
pub(crate) fn bfs<T, F, I>(sources: impl IntoIterator<Item = T>, mut next: F) -> HashSet<T>
where
    T: Copy + Eq + std::hash::Hash,
    F: FnMut(T) -> I,
    I: IntoIterator<Item = T>,
{
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for s in sources {
        if seen.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for v in next(u) {
            if seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(i32, i32)]) -> VertexSet {
        points.iter().map(|&(x, y)| Point::xy(x, y)).collect()
    }

    #[test]
    fn l1_distance_examples() {
        let o = Point::xy(0, 0);
        assert_eq!(l1_distance(&o, &o).unwrap(), 0);
        assert_eq!(l1_distance(&o, &Point::xy(3, 0)).unwrap(), 3);
        assert_eq!(
            l1_distance(&Point::xy(1, -2), &Point::xy(-1, 1)).unwrap(),
            5
        );
        assert!(matches!(
            l1_distance(&o, &Point::new(&[0, 0, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn boundaries_of_single_vertex() {
        let b = boundaries(&set(&[(0, 0)])).unwrap();
        assert_eq!(b.inner, set(&[(0, 0)]));
        assert_eq!(b.outer.len(), 4);
        assert_eq!(b.edges.len(), 4);
    }

    #[test]
    fn boundaries_of_domino_and_box() {
        let b = boundaries(&set(&[(0, 0), (1, 0)])).unwrap();
        assert_eq!(b.edges.len(), 6);

        let boxed: VertexSet = Window::cube(Point::xy(0, 0), 1).vertices().collect();
        let b = boundaries(&boxed).unwrap();
        assert_eq!(b.inner.len(), 8);
        assert_eq!(b.edges.len(), 12);
        for e in &b.edges {
            let (u, v) = e.endpoints();
            let (inside, outside) = if boxed.contains(&u) { (u, v) } else { (v, u) };
            assert!(b.inner.contains(&inside));
            assert!(b.outer.contains(&outside));
        }
    }

    #[test]
    fn boundaries_reject_empty() {
        assert_eq!(boundaries(&VertexSet::new()), Err(Error::EmptySet));
    }

    #[test]
    fn induced_edge_sets() {
        assert!(edge_set(&set(&[(0, 0)])).is_empty());
        assert_eq!(edge_set(&set(&[(0, 0), (1, 0)])).len(), 1);
        let boxed: VertexSet = Window::cube(Point::xy(0, 0), 1).vertices().collect();
        assert_eq!(edge_set(&boxed).len(), 12);
    }

    #[test]
    fn box_boundary_is_at_most_ten_l() {
        for l in 1..60u32 {
            let boxed: VertexSet = Window::cube(Point::xy(0, 0), l).vertices().collect();
            let b = boundaries(&boxed).unwrap();
            assert!(b.inner.len() as u32 <= 10 * l, "L = {l}");
        }
    }

    #[test]
    fn dual_convention() {
        let e = Edge::between(Point::xy(0, 0), Point::xy(1, 0)).unwrap();
        let d = dual_of(&e).unwrap();
        assert_eq!(
            d.endpoints(),
            (DualVertex::new(0, -1), DualVertex::new(0, 0))
        );

        let v = Edge::between(Point::xy(0, 0), Point::xy(0, 1)).unwrap();
        let d = dual_of(&v).unwrap();
        assert_eq!(
            d.endpoints(),
            (DualVertex::new(-1, 0), DualVertex::new(0, 0))
        );

        let e3 = Edge::new(Point::new(&[0, 0, 0]), 0);
        assert_eq!(dual_of(&e3), Err(Error::NotPlanar(3)));
    }

    #[test]
    fn dual_is_bijection_on_window() {
        let w = Window::new(&[-25, -25], &[24, 24]).unwrap();
        let mut seen = HashSet::new();
        for e in w.edges() {
            let d = dual_of(&e).unwrap();
            assert_eq!(primal_of(&d), e);
            assert!(seen.insert(d));
        }
        assert_eq!(seen.len(), 2 * 50 * 49);
    }

    #[test]
    fn window_indexing_roundtrip() {
        let w = Window::new(&[-2, 3, 0], &[1, 5, 2]).unwrap();
        assert_eq!(w.vertex_count(), 4 * 3 * 3);
        for i in 0..w.vertex_count() {
            assert_eq!(w.index_of(&w.point_at(i)), Some(i));
        }
        let edges: Vec<Edge> = w.edges().collect();
        let mut sorted = edges.clone();
        sorted.sort();
        assert_eq!(edges, sorted, "slot order is canonical order");
        for e in &edges {
            let s = w.slot_of(e).unwrap();
            assert_eq!(w.edge_at(s), Some(*e));
            let (u, v) = w.slot_endpoints(s);
            assert_eq!((w.point_at(u), w.point_at(v)), e.endpoints());
        }
        for v in 0..w.vertex_count() {
            let p = w.point_at(v);
            let n = w.incident(v).count();
            let expect = p.neighbors().filter(|q| w.contains(q)).count();
            assert_eq!(n, expect);
        }
    }

    #[test]
    fn regions() {
        let ball = Region::L1Ball {
            centers: set(&[(0, 0)]),
            radius: 2,
        };
        assert_eq!(ball.members().len(), 13);
        assert!(ball.contains(&Point::xy(1, 1)));
        assert!(!ball.contains(&Point::xy(2, 1)));
        let sq = Region::LInfBox {
            center: Point::xy(0, 0),
            radius: 2,
        };
        assert_eq!(sq.members().len(), 25);
        assert!(sq.contains(&Point::xy(2, -2)));
        let w = ball.bounding_window().unwrap();
        assert_eq!(w.vertex_count(), 25);
    }
}
