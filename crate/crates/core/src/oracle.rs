//! Exact event probabilities on tiny graphs.
//!
//! At time `t` the configuration depends only on which clocks ring by `t` and
//! on their relative order. Given the set `S` of edges ringing by `t`
//! (probability `t^|S| (1−t)^(m−|S|)`), every ordering of `S` is equally
//! likely, so
//!
//! ```text
//! P(A) = Σ_k t^k (1−t)^(m−k) · N_k / k!
//! ```
//!
//! where `N_k` counts pairs (subset of size `k`, ordering of it) after which
//! `A` holds. The counts are computed once per constraint assignment by
//! enumerating subsets by size and orderings lexicographically; the result is
//! an exact polynomial in `t`, evaluated in floating point or in rationals.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::dynamics::{evolve_graph, run_in_order};
use crate::environment::{ConstraintLaw, SeedSpec, Stream};
use crate::error::{Error, Result};
use crate::stats::Estimate;

pub const MAX_EDGES: usize = 9;
pub const MAX_VERTICES: usize = 10;
/// Largest edge count accepted by the rational evaluator.
pub const RATIONAL_MAX_EDGES: usize = 6;

/// A simple graph with at most [`MAX_VERTICES`] vertices and [`MAX_EDGES`] edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TinyGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl TinyGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count > MAX_VERTICES {
            return Err(Error::GraphTooLarge(format!(
                "{vertex_count} vertices (limit {MAX_VERTICES})"
            )));
        }
        if edges.len() > MAX_EDGES {
            return Err(Error::GraphTooLarge(format!(
                "{} edges (limit {MAX_EDGES})",
                edges.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("repeated edge ({u},{v})")));
            }
        }
        Ok(TinyGraph {
            vertex_count,
            edges: edges.to_vec(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn check_constraints(&self, kappa: &[u8]) -> Result<()> {
        if kappa.len() != self.vertex_count {
            return Err(Error::InvalidGraph(format!(
                "{} constraints for {} vertices",
                kappa.len(),
                self.vertex_count
            )));
        }
        Ok(())
    }
}

/// A tiny graph with fixed constraints, as read from the text format:
///
/// ```text
/// # comment
/// vertices 3
/// edge 0 1
/// edge 1 2
/// kappa 3 1 3
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TinyInstance {
    pub graph: TinyGraph,
    pub kappa: Vec<u8>,
}

impl TinyInstance {
    pub fn new(graph: TinyGraph, kappa: Vec<u8>) -> Result<Self> {
        graph.check_constraints(&kappa)?;
        Ok(TinyInstance { graph, kappa })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices = None;
        let mut edges = Vec::new();
        let mut kappa = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidGraph(format!("line {}: '{}'", lineno + 1, raw.trim()));
            let mut words = line.split_whitespace();
            let head = words.next().ok_or_else(bad)?;
            let nums: std::result::Result<Vec<usize>, _> = words.map(str::parse).collect();
            let nums = nums.map_err(|_| bad())?;
            match head {
                "vertices" if nums.len() == 1 => vertices = Some(nums[0]),
                "edge" if nums.len() == 2 => edges.push((nums[0], nums[1])),
                "kappa" => {
                    let k: std::result::Result<Vec<u8>, _> =
                        nums.iter().map(|n| u8::try_from(*n)).collect();
                    kappa = Some(k.map_err(|_| bad())?);
                }
                _ => return Err(bad()),
            }
        }
        let vertices =
            vertices.ok_or_else(|| Error::InvalidGraph("missing 'vertices' line".into()))?;
        let kappa = kappa.ok_or_else(|| Error::InvalidGraph("missing 'kappa' line".into()))?;
        TinyInstance::new(TinyGraph::new(vertices, &edges)?, kappa)
    }
}

impl fmt::Display for TinyInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices {}", self.graph.vertex_count)?;
        for (u, v) in &self.graph.edges {
            writeln!(f, "edge {u} {v}")?;
        }
        write!(f, "kappa")?;
        for k in &self.kappa {
            write!(f, " {k}")?;
        }
        writeln!(f)
    }
}

/// `N_k` for `k = 0..=m`.
pub fn ordering_counts(
    graph: &TinyGraph,
    kappa: &[u8],
    event: &(dyn Fn(&[bool]) -> bool + Sync),
) -> Result<Vec<u64>> {
    graph.check_constraints(kappa)?;
    let m = graph.edge_count();
    Ok((0..=m)
        .map(|k| {
            let mut count = 0u64;
            for subset in (0..m).combinations(k) {
                for order in subset.iter().copied().permutations(k) {
                    if event(&run_in_order(kappa, &graph.edges, &order)) {
                        count += 1;
                    }
                }
            }
            count
        })
        .collect())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

fn polynomial_at(counts: &[u64], t: f64) -> f64 {
    let m = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, c)| t.powi(k as i32) * (1.0 - t).powi((m - k) as i32) * *c as f64 / factorial(k))
        .sum()
}

/// Exact `P(event)` at time `t` with fixed constraints.
pub fn exact_event_probability(
    graph: &TinyGraph,
    kappa: &[u8],
    t: f64,
    event: &(dyn Fn(&[bool]) -> bool + Sync),
) -> Result<f64> {
    check_t(t)?;
    Ok(polynomial_at(&ordering_counts(graph, kappa, event)?, t))
}

/// Exact `P(event)` in rational arithmetic for rational `t`.
pub fn exact_event_probability_rational(
    graph: &TinyGraph,
    kappa: &[u8],
    t: Ratio<i64>,
    event: &(dyn Fn(&[bool]) -> bool + Sync),
) -> Result<Ratio<i128>> {
    let m = graph.edge_count();
    if m > RATIONAL_MAX_EDGES {
        return Err(Error::GraphTooLarge(format!(
            "rational mode supports at most {RATIONAL_MAX_EDGES} edges"
        )));
    }
    let t = Ratio::new(i128::from(*t.numer()), i128::from(*t.denom()));
    if t < Ratio::from_integer(0) || t > Ratio::from_integer(1) {
        return Err(Error::OutOfRange {
            what: "t",
            value: *t.numer() as f64 / *t.denom() as f64,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let counts = ordering_counts(graph, kappa, event)?;
    let one = Ratio::from_integer(1i128);
    let mut total = Ratio::from_integer(0i128);
    for (k, c) in counts.iter().enumerate() {
        let fact: i128 = (1..=k as i128).product();
        let weight = pow(t, k) * pow(one - t, m - k);
        total += weight * Ratio::new(i128::from(*c), fact);
    }
    Ok(total)
}

fn pow(x: Ratio<i128>, k: usize) -> Ratio<i128> {
    (0..k).fold(Ratio::from_integer(1), |acc, _| acc * x)
}

/// Exact `P(event)` when vertex `v` draws its constraint from `laws[v]`.
pub fn exact_probability_over_constraints(
    graph: &TinyGraph,
    laws: &[ConstraintLaw],
    t: f64,
    event: &(dyn Fn(&[bool]) -> bool + Sync),
) -> Result<f64> {
    check_t(t)?;
    if laws.len() != graph.vertex_count {
        return Err(Error::InvalidGraph(format!(
            "{} laws for {} vertices",
            laws.len(),
            graph.vertex_count
        )));
    }
    let supports: Vec<Vec<(u8, f64)>> = laws
        .iter()
        .map(|law| {
            law.rho()
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(j, p)| (j as u8, *p))
                .collect()
        })
        .collect();
    let assignments: Vec<Vec<(u8, f64)>> = supports.into_iter().multi_cartesian_product().collect();
    let assignments = if assignments.is_empty() {
        // zero vertices: the single empty assignment
        vec![Vec::new()]
    } else {
        assignments
    };
    let parts: Result<Vec<f64>> = assignments
        .par_iter()
        .map(|assign| {
            let kappa: Vec<u8> = assign.iter().map(|(k, _)| *k).collect();
            let weight: f64 = assign.iter().map(|(_, p)| *p).product();
            Ok(weight * exact_event_probability(graph, &kappa, t, event)?)
        })
        .collect();
    Ok(parts?.iter().sum())
}

/// How the constraints of a tiny graph are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum TinyConstraints {
    Fixed(Vec<u8>),
    Random(Vec<ConstraintLaw>),
}

/// Monte Carlo estimate of an event on a tiny graph, using the same
/// counter-based streams and sweep as the lattice engine.
pub fn monte_carlo_event_probability(
    graph: &TinyGraph,
    constraints: &TinyConstraints,
    t: f64,
    event: &(dyn Fn(&[bool]) -> bool + Sync),
    master_seed: u64,
    n: u64,
) -> Result<Estimate> {
    check_t(t)?;
    match constraints {
        TinyConstraints::Fixed(k) => graph.check_constraints(k)?,
        TinyConstraints::Random(l) if l.len() != graph.vertex_count => {
            return Err(Error::InvalidGraph("one law per vertex required".into()))
        }
        TinyConstraints::Random(_) => {}
    }
    let hits: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let seed = SeedSpec::new(master_seed, rep);
            let ch = seed.hasher(Stream::EdgeClocks);
            let clocks: Vec<f64> = (0..graph.edge_count() as u64)
                .map(|i| ch.index(i))
                .collect();
            let kappa: Vec<u8> = match constraints {
                TinyConstraints::Fixed(k) => k.clone(),
                TinyConstraints::Random(laws) => {
                    let vh = seed.hasher(Stream::VertexUniforms);
                    laws.iter()
                        .enumerate()
                        .map(|(v, law)| law.constraint_of(vh.index(v as u64)))
                        .collect()
                }
            };
            let open = evolve_graph(&kappa, &graph.edges, &clocks);
            let at_t: Vec<bool> = open
                .iter()
                .zip(&clocks)
                .map(|(o, c)| *o && *c <= t)
                .collect();
            event(&at_t)
        })
        .collect();
    Ok(Estimate::from_indicators(hits))
}

type EdgeEvent = Arc<dyn Fn(&[bool]) -> bool + Send + Sync>;

/// A named tiny graph with constraints and an event.
#[derive(Clone)]
pub struct OracleCase {
    pub name: String,
    pub event_label: String,
    pub graph: TinyGraph,
    pub constraints: TinyConstraints,
    pub event: EdgeEvent,
}

impl fmt::Debug for OracleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleCase")
            .field("name", &self.name)
            .field("event", &self.event_label)
            .finish()
    }
}

impl OracleCase {
    pub fn exact(&self, t: f64) -> Result<f64> {
        match &self.constraints {
            TinyConstraints::Fixed(k) => exact_event_probability(&self.graph, k, t, &*self.event),
            TinyConstraints::Random(l) => {
                exact_probability_over_constraints(&self.graph, l, t, &*self.event)
            }
        }
    }

    pub fn monte_carlo(&self, t: f64, master_seed: u64, n: u64) -> Result<Estimate> {
        monte_carlo_event_probability(
            &self.graph,
            &self.constraints,
            t,
            &*self.event,
            master_seed,
            n,
        )
    }
}

fn case(
    name: &'static str,
    event_label: &'static str,
    n: usize,
    edges: &[(usize, usize)],
    constraints: TinyConstraints,
    event: impl Fn(&[bool]) -> bool + Send + Sync + 'static,
) -> OracleCase {
    OracleCase {
        name: name.to_string(),
        event_label: event_label.to_string(),
        graph: TinyGraph::new(n, edges).expect("built-in graph is valid"),
        constraints,
        event: Arc::new(event),
    }
}

/// The built-in verification graphs (all with at most 8 edges).
pub fn builtin_cases() -> Vec<OracleCase> {
    use TinyConstraints::{Fixed, Random};
    let grid_2x3 = [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)];
    let law = |rho: &[f64]| ConstraintLaw::new(rho).expect("valid law");
    vec![
        case(
            "edge-k11",
            "edge open",
            2,
            &[(0, 1)],
            Fixed(vec![1, 1]),
            |s| s[0],
        ),
        case(
            "edge-k03",
            "edge open",
            2,
            &[(0, 1)],
            Fixed(vec![0, 3]),
            |s| s[0],
        ),
        case(
            "path3-mid1",
            "first edge open",
            3,
            &[(0, 1), (1, 2)],
            Fixed(vec![3, 1, 3]),
            |s| s[0],
        ),
        case(
            "path3-mid1",
            "both edges open",
            3,
            &[(0, 1), (1, 2)],
            Fixed(vec![3, 1, 3]),
            |s| s[0] && s[1],
        ),
        case(
            "path3-mid1",
            "exactly one edge open",
            3,
            &[(0, 1), (1, 2)],
            Fixed(vec![3, 1, 3]),
            |s| s[0] != s[1],
        ),
        case(
            "triangle-k2",
            "all edges open",
            3,
            &[(0, 1), (1, 2), (0, 2)],
            Fixed(vec![2, 2, 2]),
            |s| s.iter().all(|b| *b),
        ),
        case(
            "star4-center2",
            "center saturated",
            5,
            &[(0, 1), (0, 2), (0, 3), (0, 4)],
            Fixed(vec![2, 3, 3, 1, 0]),
            |s| s.iter().filter(|b| **b).count() == 2,
        ),
        case(
            "square-k2121",
            "opposite edges open",
            4,
            &[(0, 1), (1, 2), (2, 3), (3, 0)],
            Fixed(vec![2, 1, 2, 1]),
            |s| s[0] && s[2],
        ),
        case(
            "path5-alternating",
            "two middle edges open",
            5,
            &[(0, 1), (1, 2), (2, 3), (3, 4)],
            Fixed(vec![1, 2, 1, 2, 1]),
            |s| s[1] && s[2],
        ),
        case(
            "grid2x3-mixed",
            "at least four edges open",
            6,
            &grid_2x3,
            Fixed(vec![3, 2, 1, 3, 2, 3]),
            |s| s.iter().filter(|b| **b).count() >= 4,
        ),
        case(
            "grid2x3-k3",
            "middle vertex degree 3",
            6,
            &grid_2x3,
            Fixed(vec![3; 6]),
            |s| s[0] && s[1] && s[5],
        ),
        case(
            "path9-k0123",
            "no two consecutive open",
            9,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 7),
                (7, 8),
            ],
            Fixed(vec![3, 2, 1, 3, 0, 2, 3, 1, 2]),
            |s| s.windows(2).all(|w| !(w[0] && w[1])),
        ),
        case(
            "edge-random",
            "edge open",
            2,
            &[(0, 1)],
            Random(vec![law(&[0.5, 0.0, 0.0, 0.5]), law(&[0.5, 0.0, 0.0, 0.5])]),
            |s| s[0],
        ),
        case(
            "square-random",
            "some vertex saturated at 2",
            4,
            &[(0, 1), (1, 2), (2, 3), (3, 0)],
            Random(vec![law(&[0.1, 0.2, 0.3, 0.4]); 4]),
            |s| (0..4).any(|v| s[v] && s[(v + 3) % 4]),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge() -> TinyGraph {
        TinyGraph::new(2, &[(0, 1)]).unwrap()
    }

    fn path3() -> TinyGraph {
        TinyGraph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn single_edge_closed_forms() {
        let g = single_edge();
        for t in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let p = exact_event_probability(&g, &[1, 1], t, &|s: &[bool]| s[0]).unwrap();
            assert!((p - t).abs() < 1e-15);
            let z = exact_event_probability(&g, &[0, 3], t, &|s: &[bool]| s[0]).unwrap();
            assert_eq!(z, 0.0);
        }
    }

    #[test]
    fn path_closed_form() {
        let g = path3();
        for t in [0.25, 0.5, 0.9] {
            let p = exact_event_probability(&g, &[3, 1, 3], t, &|s: &[bool]| s[0]).unwrap();
            assert!((p - (t - t * t / 2.0)).abs() < 1e-15);
        }
        let half = exact_event_probability(&g, &[3, 1, 3], 0.5, &|s: &[bool]| s[0]).unwrap();
        assert!((half - 0.375).abs() < 1e-15);
        let r =
            exact_event_probability_rational(&g, &[3, 1, 3], Ratio::new(1, 2), &|s: &[bool]| s[0])
                .unwrap();
        assert_eq!(r, Ratio::new(3, 8));
    }

    #[test]
    fn random_constraint_examples() {
        let g = single_edge();
        let law = ConstraintLaw::new(&[0.5, 0.0, 0.0, 0.5]).unwrap();
        let p =
            exact_probability_over_constraints(&g, &[law.clone(), law], 1.0, &|s: &[bool]| s[0])
                .unwrap();
        assert!((p - 0.25).abs() < 1e-15);

        let point = ConstraintLaw::point_mass(2, 3).unwrap();
        let mid = ConstraintLaw::point_mass(2, 1).unwrap();
        let laws = vec![point.clone(), mid, point];
        let g3 = path3();
        for t in [0.0, 0.3, 1.0] {
            let both =
                exact_probability_over_constraints(&g3, &laws, t, &|s: &[bool]| s[0] && s[1])
                    .unwrap();
            assert_eq!(both, 0.0);
            let first =
                exact_probability_over_constraints(&g3, &laws, t, &|s: &[bool]| s[0]).unwrap();
            let fixed = exact_event_probability(&g3, &[3, 1, 3], t, &|s: &[bool]| s[0]).unwrap();
            assert!((first - fixed).abs() < 1e-15);
        }
    }

    #[test]
    fn normalisation_and_time_zero() {
        for c in builtin_cases() {
            for t in [0.0, 0.37, 1.0] {
                let p = c.exact(t).unwrap();
                let ev = c.event.clone();
                let q = match &c.constraints {
                    TinyConstraints::Fixed(k) => {
                        exact_event_probability(&c.graph, k, t, &move |s: &[bool]| !ev(s)).unwrap()
                    }
                    TinyConstraints::Random(l) => {
                        exact_probability_over_constraints(&c.graph, l, t, &move |s: &[bool]| {
                            !ev(s)
                        })
                        .unwrap()
                    }
                };
                assert!((p + q - 1.0).abs() < 1e-12, "{c:?} at {t}");
            }
            let closed = vec![false; c.graph.edge_count()];
            let expect = if (c.event)(&closed) { 1.0 } else { 0.0 };
            assert!((c.exact(0.0).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn rational_agrees_with_float() {
        let g = TinyGraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let kappa = [2, 1, 3, 2];
        let ev = |s: &[bool]| s[0] || s[4];
        for (num, den) in [(1, 4), (1, 2), (9, 10)] {
            let r =
                exact_event_probability_rational(&g, &kappa, Ratio::new(num, den), &ev).unwrap();
            let f = exact_event_probability(&g, &kappa, num as f64 / den as f64, &ev).unwrap();
            let rf = *r.numer() as f64 / *r.denom() as f64;
            assert!((rf - f).abs() < 1e-14);
        }
    }

    #[test]
    fn size_limits() {
        let edges: Vec<(usize, usize)> = (0..10).map(|i| (i, i + 1)).collect();
        assert!(matches!(
            TinyGraph::new(11, &edges),
            Err(Error::GraphTooLarge(_))
        ));
        assert!(matches!(
            TinyGraph::new(10, &edges),
            Err(Error::GraphTooLarge(_))
        ));
        assert!(matches!(
            TinyGraph::new(3, &[(0, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            TinyGraph::new(3, &[(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        let seven = TinyGraph::new(8, &(0..7).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap();
        assert!(exact_event_probability_rational(
            &seven,
            &[1; 8],
            Ratio::new(1, 2),
            &|_: &[bool]| true
        )
        .is_err());
    }

    #[test]
    fn text_format_roundtrip() {
        let text = "# path\nvertices 3\nedge 0 1\nedge 1 2\nkappa 3 1 3\n";
        let inst = TinyInstance::parse(text).unwrap();
        assert_eq!(inst.graph, path3());
        assert_eq!(inst.kappa, vec![3, 1, 3]);
        assert_eq!(TinyInstance::parse(&inst.to_string()).unwrap(), inst);
        assert!(TinyInstance::parse("vertices 2\nedge 0 1\n").is_err());
        assert!(TinyInstance::parse("vertices 2\nedge 0 x\nkappa 1 1").is_err());
        assert!(TinyInstance::parse("vertices 2\nedge 0 1\nkappa 1").is_err());
    }

    #[test]
    fn monte_carlo_smoke() {
        let c = &builtin_cases()[2];
        let est = c.monte_carlo(0.5, 1, 20_000).unwrap();
        assert!(est.agrees_with(0.375, 4.0), "{est:?}");
    }
}
