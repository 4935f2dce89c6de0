//! Planar renormalisation: dual crossings of annuli, the crossing-probability
//! proxy for percolation, the Peierls certificate, and the scale ladder.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, ConstantsTable};
use crate::dynamics::{evolve, CausalEvaluator, Configuration};
use crate::environment::{ConstraintLaw, Environment, EnvironmentField, LazyEnvironment, SeedSpec};
use crate::error::{Error, Result};
use crate::lattice::{
    bfs, dual_of, primal_of, DualEdge, DualVertex, Edge, Point, VertexSet, Window,
};
use crate::stats::Estimate;
use crate::union_find::UnionFind;

/// Smallest first scale the ladder accepts.
pub const MIN_L0: u64 = 25;

/// Edge states seen from the dual lattice: a dual edge is open exactly when
/// the primal edge it crosses is.
#[derive(Clone, Copy, Debug)]
pub struct DualConfiguration<'a> {
    primal: &'a Configuration,
}

impl<'a> DualConfiguration<'a> {
    pub fn new(primal: &'a Configuration) -> Result<Self> {
        if primal.window().dim() != 2 {
            return Err(Error::NotPlanar(primal.window().dim()));
        }
        Ok(DualConfiguration { primal })
    }

    pub fn is_open(&self, e: &DualEdge) -> bool {
        self.primal.is_open(&primal_of(e))
    }

    pub fn is_closed(&self, e: &DualEdge) -> bool {
        !self.is_open(e)
    }
}

/// Primal box that must be simulated for `A_N(x)`: every dual edge inside
/// `B*_{2N}(x)` crosses a primal edge with endpoints in it.
pub fn annulus_primal_box(x: DualVertex, n: u32) -> Window {
    let r = 2 * n as i32;
    Window::new(&[x.a - r, x.b - r], &[x.a + r + 1, x.b + r + 1]).expect("valid box")
}

fn check_covers(window: &Window, needed: &Window) -> Result<()> {
    if window.contains(&needed.lo()) && window.contains(&needed.hi()) {
        Ok(())
    } else {
        Err(Error::OutsideWindow(format!(
            "window {:?}..{:?} does not cover {:?}..{:?}",
            window.lo(),
            window.hi(),
            needed.lo(),
            needed.hi()
        )))
    }
}

/// `A_N(x)` for an arbitrary primal edge-state oracle.
fn annulus_crossing_with(x: DualVertex, n: u32, mut open: impl FnMut(&Edge) -> bool) -> bool {
    let outer = 2 * n;
    let sources = (-(n as i32)..=n as i32)
        .flat_map(|i| (-(n as i32)..=n as i32).map(move |j| DualVertex::new(x.a + i, x.b + j)));
    let mut hit = false;
    let seen = bfs(sources, |u: DualVertex| {
        let mut next = Vec::with_capacity(4);
        if hit {
            return next;
        }
        if u.linf(&x) == outer {
            hit = true;
            return next;
        }
        for v in u.neighbors() {
            if v.linf(&x) > outer {
                continue;
            }
            let de = DualEdge::between(u, v).expect("neighbours");
            if !open(&primal_of(&de)) {
                next.push(v);
            }
        }
        next
    });
    hit || (n == 0 && !seen.is_empty())
}

/// `A_N(x)`: a closed dual path from `B*_N(x)` to the boundary of
/// `B*_{2N}(x)` staying inside `B*_{2N}(x)`.
pub fn annulus_dual_crossing(config: &Configuration, x: DualVertex, n: u32) -> Result<bool> {
    let dual = DualConfiguration::new(config)?;
    check_covers(config.window(), &annulus_primal_box(x, n))?;
    Ok(annulus_crossing_with(x, n, |e| dual.primal.is_open(e)))
}

/// Default free-boundary pad for `A_N`: `max(16, N/2)`.
pub fn default_pad(n: u32) -> u32 {
    (n / 2).max(16)
}

#[derive(Clone, Debug, Serialize)]
pub struct PadCheck {
    pub pad: u32,
    pub replicates: u64,
    /// Mean of (doubled-pad indicator − base indicator) on the subsample.
    pub shift: f64,
    pub se: f64,
}

impl PadCheck {
    pub fn consistent(&self) -> bool {
        self.shift.abs() <= 3.0 * self.se
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PstarEstimate {
    pub n_box: u32,
    pub t: f64,
    pub pad: u32,
    pub estimate: Estimate,
    pub pad_check: PadCheck,
}

fn pstar_indicators(
    master_seed: u64,
    law: &ConstraintLaw,
    t: f64,
    n_box: u32,
    pad: u32,
    reps: std::ops::Range<u64>,
) -> Vec<bool> {
    let window = Window::cube(Point::xy(0, 0), 2 * n_box + 1 + pad);
    let x = DualVertex::new(0, 0);
    reps.into_par_iter()
        .map(|rep| {
            let env = LazyEnvironment::new(&SeedSpec::new(master_seed, rep), &window, law);
            let mut eval = CausalEvaluator::new(&env);
            annulus_crossing_with(x, n_box, |e| eval.is_open_at(e, t))
        })
        .collect()
}

/// Monte Carlo `P*(N)` on the free-boundary window `B_{2N+1+pad}(0)`, with
/// the first tenth of the replicates rerun at twice the pad.
pub fn estimate_pstar(
    master_seed: u64,
    law: &ConstraintLaw,
    t: f64,
    n_box: u32,
    pad: Option<u32>,
    n: u64,
) -> Result<PstarEstimate> {
    if law.dim() != 2 {
        return Err(Error::NotPlanar(law.dim()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let pad = pad.unwrap_or_else(|| default_pad(n_box));
    if pad < 2 {
        return Err(Error::InvalidParameter(format!(
            "pad must be at least 2, got {pad}"
        )));
    }
    let base = pstar_indicators(master_seed, law, t, n_box, pad, 0..n);
    let sub = (n / 10).max(1).min(n);
    let doubled = pstar_indicators(master_seed, law, t, n_box, 2 * pad, 0..sub);
    let diffs: Vec<f64> = doubled
        .iter()
        .zip(&base)
        .map(|(a, b)| f64::from(u8::from(*a)) - f64::from(u8::from(*b)))
        .collect();
    let m = diffs.len().max(1) as f64;
    let shift = diffs.iter().sum::<f64>() / m;
    let var = diffs.iter().map(|d| (d - shift).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(PstarEstimate {
        n_box,
        t,
        pad,
        estimate: Estimate::from_indicators(base),
        pad_check: PadCheck {
            pad: 2 * pad,
            replicates: sub,
            shift,
            se: (var / m).sqrt(),
        },
    })
}

/// First time at which the open edges of the `L × L` box `{0..L−1}²` join
/// its left and right columns; `∞` if they never do.
pub fn crossing_time(env: &EnvironmentField) -> f64 {
    let window = Environment::window(env);
    let traj = evolve(env);
    let nv = window.vertex_count();
    let (left, right) = (nv, nv + 1);
    let (x_lo, x_hi) = (window.lo().coord(0), window.hi().coord(0));
    let mut uf = UnionFind::new(nv + 2);
    for (i, p) in window.vertices().enumerate() {
        if p.coord(0) == x_lo {
            uf.union(i, left);
        }
        if p.coord(0) == x_hi {
            uf.union(i, right);
        }
    }
    if uf.connected(left, right) {
        return 0.0;
    }
    for &slot in traj.opening_sequence() {
        let (u, v) = window.slot_endpoints(slot as usize);
        uf.union(u, v);
        if uf.connected(left, right) {
            return traj.slot_clock(slot as usize);
        }
    }
    f64::INFINITY
}

fn crossing_box(l: u32) -> Result<Window> {
    if l < 4 {
        return Err(Error::OutOfRange {
            what: "L",
            value: f64::from(l),
            lo: 4.0,
            hi: f64::INFINITY,
        });
    }
    let hi = l as i32 - 1;
    Window::new(&[0, 0], &[hi, hi])
}

/// Crossing times of replicates `0..n`, in replicate order.
pub fn crossing_times(master_seed: u64, law: &ConstraintLaw, l: u32, n: u64) -> Result<Vec<f64>> {
    if law.dim() != 2 {
        return Err(Error::NotPlanar(law.dim()));
    }
    let window = crossing_box(l)?;
    Ok((0..n)
        .into_par_iter()
        .map(|rep| {
            crossing_time(&EnvironmentField::sample(
                &SeedSpec::new(master_seed, rep),
                &window,
                law,
            ))
        })
        .collect())
}

/// Probability of an open left–right crossing of the `L × L` box at time `t`.
pub fn crossing_probability(
    master_seed: u64,
    law: &ConstraintLaw,
    t: f64,
    l: u32,
    n: u64,
) -> Result<Estimate> {
    let times = crossing_times(master_seed, law, l, n)?;
    Ok(Estimate::from_indicators(times.iter().map(|c| *c <= t)))
}

/// Crossing probability on a grid of times, from one set of replicates.
pub fn crossing_curve(times: &[f64], grid: &[f64]) -> Vec<Estimate> {
    grid.iter()
        .map(|t| Estimate::from_indicators(times.iter().map(|c| c <= t)))
        .collect()
}

/// Where curve `b` overtakes curve `a`: the split point of the grid that
/// best separates `b − a < 0` (left) from `b − a > 0` (right). Ties between
/// equally good splits are resolved by taking their median.
pub fn curve_intersection(grid: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    if grid.len() < 2 || a.len() != grid.len() || b.len() != grid.len() {
        return None;
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    if !diff.iter().any(|d| *d < 0.0) || !diff.iter().any(|d| *d > 0.0) {
        return None;
    }
    // split k: points 0..k on the left, k..len on the right
    let costs: Vec<usize> = (1..grid.len())
        .map(|k| {
            diff[..k].iter().filter(|d| **d > 0.0).count()
                + diff[k..].iter().filter(|d| **d < 0.0).count()
        })
        .collect();
    let best = *costs.iter().min()?;
    let ks: Vec<usize> = (1..grid.len()).filter(|k| costs[k - 1] == best).collect();
    let k = ks[ks.len() / 2];
    Some(0.5 * (grid[k - 1] + grid[k]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeierlsOutcome {
    /// The segment cluster is finite and a closed dual circuit surrounds it.
    FiniteWithCircuit,
    /// The segment cluster reaches the window boundary.
    TouchesBoundary,
    /// The segment cluster stays inside the window but no surrounding
    /// circuit was found. Topologically impossible: this outcome flags a bug.
    OpenUnboundedInWindow,
}

#[derive(Clone, Debug)]
pub struct PeierlsCertificate {
    pub outcome: PeierlsOutcome,
    pub cluster: VertexSet,
    pub circuit: Vec<DualEdge>,
}

/// Classifies the open cluster `𝓞_L` of the segment `{0..L} × {0}` and, when
/// it is interior, extracts and verifies a closed dual circuit around it.
///
/// The circuit is dual to the edges joining `𝓞_L` to the unbounded component
/// of its complement: the boundary of the union of unit squares centred on
/// `𝓞_L` with its holes filled.
pub fn peierls_certificate(config: &Configuration, l: u32) -> Result<PeierlsCertificate> {
    let window = config.window();
    if window.dim() != 2 {
        return Err(Error::NotPlanar(window.dim()));
    }
    let segment: Vec<Point> = (0..=l as i32).map(|x| Point::xy(x, 0)).collect();
    if segment.iter().any(|p| !window.contains_with_margin(p, 1)) {
        return Err(Error::MarginViolation(format!(
            "segment of length {l} needs a margin of 1 inside the window"
        )));
    }
    let cluster: HashSet<Point> = bfs(segment.iter().copied(), |p: Point| {
        p.incident_edges()
            .filter(|e| config.is_open(e))
            .map(|e| {
                let (u, v) = e.endpoints();
                if u == p {
                    v
                } else {
                    u
                }
            })
            .collect::<Vec<_>>()
    });
    let sorted: VertexSet = cluster.iter().copied().collect();
    if cluster.iter().any(|p| window.on_boundary(p)) {
        return Ok(PeierlsCertificate {
            outcome: PeierlsOutcome::TouchesBoundary,
            cluster: sorted,
            circuit: vec![],
        });
    }

    // the infinite component of the complement, truncated to the window
    let seeds = window.vertices().filter(|p| window.on_boundary(p));
    let exterior: HashSet<Point> = bfs(seeds, |p: Point| {
        p.neighbors()
            .filter(|q| window.contains(q) && !cluster.contains(q))
            .collect::<Vec<_>>()
    });
    let mut circuit = vec![];
    for u in &sorted {
        for e in u.incident_edges() {
            let (a, b) = e.endpoints();
            let w = if a == *u { b } else { a };
            if exterior.contains(&w) {
                circuit.push(dual_of(&e)?);
            }
        }
    }
    circuit.sort();
    let outcome = if verify_circuit(config, &circuit) {
        PeierlsOutcome::FiniteWithCircuit
    } else {
        PeierlsOutcome::OpenUnboundedInWindow
    };
    Ok(PeierlsCertificate {
        outcome,
        cluster: sorted,
        circuit,
    })
}

/// All edges closed, every dual vertex of even degree, and an odd number of
/// crossings with the ray from the origin along the positive first axis.
fn verify_circuit(config: &Configuration, circuit: &[DualEdge]) -> bool {
    if circuit.is_empty() {
        return false;
    }
    let mut degree: HashMap<DualVertex, u32> = HashMap::new();
    let mut ray_hits = 0u32;
    for de in circuit {
        let e = primal_of(de);
        if config.is_open(&e) {
            return false;
        }
        let (f, g) = de.endpoints();
        *degree.entry(f).or_default() += 1;
        *degree.entry(g).or_default() += 1;
        if e.axis == 0 && e.base.coord(1) == 0 && e.base.coord(0) >= 0 {
            ray_hits += 1;
        }
    }
    degree.values().all(|d| d % 2 == 0) && ray_hits % 2 == 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionRow {
    pub l: u128,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MinimalScales {
    pub c1: u128,
    pub c2: u128,
    pub c3: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalePlan {
    pub l0: u64,
    pub scales: Vec<u128>,
    pub constants: ConstantsTable,
    pub conditions: Vec<ConditionRow>,
    pub minimal: MinimalScales,
}

/// `ln(L·e^{−ψL}) − ln(L^{−8})`; C-1 holds when this is `≤ 0`.
pub fn condition1_gap(l: f64, psi: f64) -> f64 {
    9.0 * l.ln() - psi * l
}

/// `ln(32(20c3+1)/L)`; C-2 holds when this is `≤ 0`.
pub fn condition2_gap(l: f64, c3: f64) -> f64 {
    (32.0 * (20.0 * c3 + 1.0)).ln() - l.ln()
}

/// `ln(c7·L²·c6^L) − ln(L^{−4})`; C-3 holds when this is `≤ 0`.
pub fn condition3_gap(l: f64, c6: f64, c7: f64) -> f64 {
    c7.ln() + 6.0 * l.ln() + l * c6.ln()
}

/// Smallest `L ≥ 25` from which `gap ≤ 0` holds for good. The gaps above are
/// eventually decreasing, so once the gap is nonpositive and falling the
/// condition persists; the threshold is then located by bisection.
pub fn minimal_scale(gap: impl Fn(f64) -> f64) -> u128 {
    let holds = |l: u128| gap(l as f64) <= 0.0;
    let falling = |l: u128| gap(l as f64 + 1.0) <= gap(l as f64);
    let mut lo = u128::from(MIN_L0);
    if holds(lo) && falling(lo) {
        return lo;
    }
    let mut hi = lo * 2;
    while !(holds(hi) && falling(hi)) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) && falling(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The ladder `L_{k+1} = ⌊√L_k⌋·L_k` with conditions C-1..C-3 at each scale.
pub fn scale_plan(l0: u64, count: usize, c5: Option<f64>) -> Result<ScalePlan> {
    if l0 < MIN_L0 {
        return Err(Error::OutOfRange {
            what: "L0",
            value: l0 as f64,
            lo: MIN_L0 as f64,
            hi: f64::INFINITY,
        });
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let constants = bounds::constants(2, c5)?;
    let mut scales = vec![u128::from(l0)];
    while scales.len() < count {
        let l = *scales.last().expect("nonempty");
        let next = l
            .isqrt()
            .checked_mul(l)
            .ok_or_else(|| Error::InvalidParameter(format!("scale overflow after {l}")))?;
        scales.push(next);
    }
    let (psi, c3, c6, c7) = (constants.psi, constants.c3, constants.c6, constants.c7);
    let conditions = scales
        .iter()
        .map(|&l| {
            let lf = l as f64;
            ConditionRow {
                l,
                c1: condition1_gap(lf, psi) <= 0.0,
                c2: condition2_gap(lf, c3) <= 0.0,
                c3: condition3_gap(lf, c6, c7) <= 0.0,
            }
        })
        .collect();
    let minimal = MinimalScales {
        c1: minimal_scale(|l| condition1_gap(l, psi)),
        c2: minimal_scale(|l| condition2_gap(l, c3)),
        c3: minimal_scale(|l| condition3_gap(l, c6, c7)),
    };
    Ok(ScalePlan {
        l0,
        scales,
        constants,
        conditions,
        minimal,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InductionStep {
    pub l_k: u128,
    pub l_next: u128,
    /// `L_{k+1} − 4L_k`.
    pub delta: f64,
    pub ln_rhs: f64,
    pub rhs: f64,
    /// `L_{k+1}^{−4}`.
    pub target: f64,
    pub met: bool,
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `32·(L_{k+1}/L_k)²·[p² + 2c3·|∂B_{L_k}|·e^{−ψδ}]` with `|∂B_{L_k}| ≤ 10L_k`
/// and `δ = L_{k+1} − 4L_k`, compared with `L_{k+1}^{−4}`.
pub fn induction_rhs(l_k: u128, pstar_k_bound: f64, c3: f64, psi: f64) -> Result<InductionStep> {
    if l_k < 1 {
        return Err(Error::InvalidParameter("L_k must be positive".into()));
    }
    if pstar_k_bound.is_nan() || pstar_k_bound < 0.0 || c3 < 0.0 {
        return Err(Error::InvalidParameter(
            "bound and c3 must be nonnegative".into(),
        ));
    }
    let l_next = l_k.isqrt() * l_k;
    let (lk, ln_) = (l_k as f64, l_next as f64);
    let delta = ln_ - 4.0 * lk;
    let ln_p2 = 2.0 * pstar_k_bound.ln();
    let ln_decoupling = (20.0 * c3 * lk).ln() - psi * delta;
    let ln_rhs = 32f64.ln() + 2.0 * (ln_ / lk).ln() + ln_add(ln_p2, ln_decoupling);
    let ln_target = -4.0 * ln_.ln();
    Ok(InductionStep {
        l_k,
        l_next,
        delta,
        ln_rhs,
        rhs: ln_rhs.exp(),
        target: ln_target.exp(),
        met: ln_rhs <= ln_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(rho: &[f64]) -> ConstraintLaw {
        ConstraintLaw::new(rho).unwrap()
    }

    #[test]
    fn annulus_trivial_cases() {
        let w = Window::cube(Point::xy(0, 0), 12);
        let x = DualVertex::new(0, 0);
        let closed = Configuration::closed(&w, 0.0);
        let open = Configuration::fully_open(&w, 1.0);
        for n in 1..=5 {
            assert!(annulus_dual_crossing(&closed, x, n).unwrap());
            assert!(!annulus_dual_crossing(&open, x, n).unwrap());
        }
        assert!(annulus_dual_crossing(&closed, x, 6).is_err());
    }

    #[test]
    fn single_closed_ray() {
        let w = Window::cube(Point::xy(0, 0), 12);
        let x = DualVertex::new(0, 0);
        let n = 3;
        let mut cfg = Configuration::fully_open(&w, 1.0);
        // dual path along b = 0 from a = 0 to a = 2N
        for a in 0..(2 * n as i32) {
            let de = DualEdge::new(DualVertex::new(a, 0), 0);
            cfg.set_open(&primal_of(&de), false).unwrap();
        }
        assert!(annulus_dual_crossing(&cfg, x, n).unwrap());
        // break the ray just before the outer boundary
        let de = DualEdge::new(DualVertex::new(2 * n as i32 - 1, 0), 0);
        cfg.set_open(&primal_of(&de), true).unwrap();
        assert!(!annulus_dual_crossing(&cfg, x, n).unwrap());
    }

    #[test]
    fn dual_view_flips_with_primal() {
        let w = Window::cube(Point::xy(0, 0), 5);
        let mut cfg = Configuration::closed(&w, 1.0);
        let e = Edge::new(Point::xy(1, -2), 1);
        let de = dual_of(&e).unwrap();
        assert!(DualConfiguration::new(&cfg).unwrap().is_closed(&de));
        cfg.set_open(&e, true).unwrap();
        let view = DualConfiguration::new(&cfg).unwrap();
        assert!(view.is_open(&de));
        assert_eq!(
            w.edges()
                .filter(|f| view.is_open(&dual_of(f).unwrap()))
                .count(),
            1
        );
    }

    #[test]
    fn pstar_trivial_and_bernoulli() {
        let est = estimate_pstar(1, &law(&[0.0, 0.0, 0.0, 1.0]), 0.0, 4, None, 50).unwrap();
        assert_eq!(est.estimate.p_hat, 1.0);
        assert_eq!(est.pad, 16);
        assert!(est.pad_check.consistent());
        assert!(estimate_pstar(1, &law(&[0.0, 0.0, 0.0, 1.0]), 0.5, 4, Some(1), 5).is_err());

        // with every constraint unattainable the model is Bernoulli(t) on the clocks
        let free = ConstraintLaw::unconstrained(2);
        let (n_box, pad, t) = (4, 4, 0.9);
        let window = Window::cube(Point::xy(0, 0), 2 * n_box + 1 + pad);
        let ind = pstar_indicators(3, &free, t, n_box, pad, 0..200);
        for (rep, got) in ind.iter().enumerate() {
            let env = EnvironmentField::sample(&SeedSpec::new(3, rep as u64), &window, &free);
            let bern = annulus_crossing_with(DualVertex::new(0, 0), n_box, |e| {
                window.contains_edge(e) && crate::environment::Environment::clock(&env, e) <= t
            });
            assert_eq!(*got, bern);
        }
    }

    #[test]
    fn crossing_trivial_cases() {
        let free = ConstraintLaw::unconstrained(2);
        assert_eq!(
            crossing_probability(1, &free, 1.0, 8, 50).unwrap().p_hat,
            1.0
        );
        assert_eq!(
            crossing_probability(1, &free, 0.0, 8, 50).unwrap().p_hat,
            0.0
        );
        assert!(crossing_probability(1, &free, 0.5, 3, 5).is_err());
        // Bernoulli time: crossing time equals the bottleneck value of the minimax path
        let times = crossing_times(2, &free, 6, 20).unwrap();
        assert!(times.iter().all(|t| (0.0..=1.0).contains(t)));
    }

    #[test]
    fn intersection_of_synthetic_curves() {
        let grid: Vec<f64> = (0..=20).map(|i| 0.6 + 0.01 * f64::from(i)).collect();
        let a: Vec<f64> = grid.iter().map(|t| 0.5 + 2.0 * (t - 0.72)).collect();
        let b: Vec<f64> = grid.iter().map(|t| 0.5 + 5.0 * (t - 0.72)).collect();
        let t = curve_intersection(&grid, &a, &b).unwrap();
        assert!((t - 0.72).abs() <= 0.01, "{t}");
        assert!(curve_intersection(&grid, &a, &a).is_none());
    }

    #[test]
    fn peierls_trivial_cases() {
        let w = Window::cube(Point::xy(0, 0), 10);
        let closed = Configuration::closed(&w, 0.0);
        let c = peierls_certificate(&closed, 3).unwrap();
        assert_eq!(c.outcome, PeierlsOutcome::FiniteWithCircuit);
        assert_eq!(c.cluster.len(), 4);
        assert_eq!(c.circuit.len(), 10);
        let open = Configuration::fully_open(&w, 1.0);
        assert_eq!(
            peierls_certificate(&open, 3).unwrap().outcome,
            PeierlsOutcome::TouchesBoundary
        );
        assert!(peierls_certificate(&closed, 10).is_err());
    }

    #[test]
    fn peierls_with_holes() {
        // an open ring around a closed hole, plus a closed interior edge
        let w = Window::cube(Point::xy(0, 0), 8);
        let mut cfg = Configuration::closed(&w, 1.0);
        for x in -2..2 {
            cfg.set_open(&Edge::new(Point::xy(x, -2), 0), true).unwrap();
            cfg.set_open(&Edge::new(Point::xy(x, 2), 0), true).unwrap();
        }
        for y in -2..2 {
            cfg.set_open(&Edge::new(Point::xy(-2, y), 1), true).unwrap();
            cfg.set_open(&Edge::new(Point::xy(2, y), 1), true).unwrap();
        }
        cfg.set_open(&Edge::new(Point::xy(0, 0), 0), true).unwrap();
        cfg.set_open(&Edge::new(Point::xy(1, 0), 0), true).unwrap();
        cfg.set_open(&Edge::new(Point::xy(2, 0), 0), false).unwrap();
        cfg.set_open(&Edge::new(Point::xy(1, 0), 1), true).unwrap();
        cfg.set_open(&Edge::new(Point::xy(1, 1), 1), true).unwrap();
        let c = peierls_certificate(&cfg, 1).unwrap();
        assert_eq!(
            c.outcome,
            PeierlsOutcome::FiniteWithCircuit,
            "{:?}",
            c.cluster
        );
    }

    #[test]
    fn peierls_random_interior_clusters_certify() {
        let l = law(&[0.0, 0.0, 1.0, 0.0]);
        let w = Window::cube(Point::xy(0, 0), 20);
        for rep in 0..100 {
            let env = EnvironmentField::sample(&SeedSpec::new(4, rep), &w, &l);
            let cfg = evolve(&env).config_at(1.0).unwrap();
            let c = peierls_certificate(&cfg, 4).unwrap();
            assert_ne!(
                c.outcome,
                PeierlsOutcome::OpenUnboundedInWindow,
                "rep {rep}"
            );
        }
    }

    #[test]
    fn scale_ladder() {
        let plan = scale_plan(25, 4, Some(1.0)).unwrap();
        assert_eq!(plan.scales, vec![25, 125, 1375, 50875]);
        assert!(scale_plan(24, 4, Some(1.0)).is_err());
        assert!(scale_plan(25, 0, Some(1.0)).is_err());
        let psi = bounds::psi(2);
        // independent linear scan for C-1
        let last_fail = (25..20_000u32)
            .rev()
            .find(|l| 9.0 * f64::from(*l).ln() > psi * f64::from(*l))
            .unwrap();
        assert_eq!(plan.minimal.c1, u128::from(last_fail) + 1);
        assert!((3_000..6_000).contains(&plan.minimal.c1));
        let closed = (32.0 * (20.0 * bounds::c3(2) + 1.0)).ceil() as u128;
        assert!(
            plan.minimal.c2.abs_diff(closed) <= 1,
            "{} vs {closed}",
            plan.minimal.c2
        );
        assert!(plan.conditions.iter().all(|row| !row.c2));
    }

    #[test]
    fn induction_step_cases() {
        let psi = bounds::psi(2);
        let c3 = bounds::c3(2);
        let zero = induction_rhs(125, 0.0, 0.0, psi).unwrap();
        assert_eq!(zero.rhs, 0.0);
        assert!(zero.met);
        let l = 36_238_786_592u128;
        let step = induction_rhs(l, (l as f64).powi(-4), c3, psi).unwrap();
        assert!(step.met, "{step:?}");
        let lo = induction_rhs(1375, 1e-6, c3, psi).unwrap();
        let hi = induction_rhs(1375, 1e-3, c3, psi).unwrap();
        assert!(hi.ln_rhs >= lo.ln_rhs);
    }
}
