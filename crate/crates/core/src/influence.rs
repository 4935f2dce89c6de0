//! Influence sets: layered compositions of interval clusters outside of
//! which the randomness cannot affect the configuration on a region.
//!
//! Clusters only look at clocks, so everything here takes an
//! [`Environment`]; constraints matter only for the locality and
//! decoupling experiments, which re-run the dynamics.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::dynamics::{evolve, CausalEvaluator, LocalEvent};
use crate::environment::{ConstraintLaw, Environment, EnvironmentField, LazyEnvironment, SeedSpec};
use crate::error::{Error, Result};
use crate::lattice::{
    boundaries, distance_to_set, edge_set, l1_ball, l1_distance, set_distance, Point, VertexSet,
    Window,
};
use crate::stats::{linear_fit, Estimate};

/// Salt for the resampled exterior in the locality check.
const RESAMPLE_SALT: u64 = 0x10ca1;

/// Fewest surviving samples a radius needs to enter the tail fit.
pub const FIT_MIN_SURVIVORS: u64 = 50;

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a <= b && b <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster interval ({a}, {b}] is not inside [0, 1]"
        )));
    }
    Ok(())
}

fn check_inside(window: &Window, set: &VertexSet) -> Result<()> {
    match set.iter().find(|p| !window.contains(p)) {
        Some(p) => Err(Error::OutsideWindow(format!("{p}"))),
        None => Ok(()),
    }
}

/// `C_{a,b}(Λ)`: the vertices joined to `Λ` by paths whose clocks lie in
/// `(a, b]`, optionally using only edges with both endpoints in `restriction`.
pub fn interval_cluster<E: Environment + ?Sized>(
    env: &E,
    seeds: &VertexSet,
    a: f64,
    b: f64,
    restriction: Option<&VertexSet>,
) -> Result<VertexSet> {
    check_interval(a, b)?;
    check_inside(env.window(), seeds)?;
    Ok(grow(env, seeds.clone(), a, b, restriction))
}

fn grow<E: Environment + ?Sized>(
    env: &E,
    mut cluster: VertexSet,
    a: f64,
    b: f64,
    restriction: Option<&VertexSet>,
) -> VertexSet {
    if a == b {
        return cluster;
    }
    let allowed = |p: &Point| restriction.is_none_or(|r| r.contains(p));
    let mut queue: VecDeque<Point> = cluster.iter().copied().collect();
    while let Some(x) = queue.pop_front() {
        if !allowed(&x) {
            continue;
        }
        for e in x.incident_edges() {
            if !env.window().contains_edge(&e) {
                continue;
            }
            let (u, v) = e.endpoints();
            let y = if u == x { v } else { u };
            if cluster.contains(&y) || !allowed(&y) {
                continue;
            }
            let c = env.clock(&e);
            if a < c && c <= b {
                cluster.insert(y);
                queue.push_back(y);
            }
        }
    }
    cluster
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfluenceSet {
    pub base: VertexSet,
    pub t_bits: u64,
    /// Cumulative layers, innermost first; the last one is the union.
    pub layers: Vec<VertexSet>,
    pub union: VertexSet,
    /// Largest graph distance from the union to the base.
    pub radius: u64,
}

impl InfluenceSet {
    pub fn t(&self) -> f64 {
        f64::from_bits(self.t_bits)
    }
}

/// Number of `1/2d` intervals needed to reach `t`: the `m` with
/// `t ∈ ((m−1)/2d, m/2d]`, and 0 at `t = 0`.
pub fn layer_count(t: f64, d: usize) -> usize {
    (2.0 * d as f64 * t).ceil() as usize
}

/// `𝓘_t(Λ)`: first the cluster over `((m−1)/2d, t]`, then successively over
/// `((j−1)/2d, j/2d]` for `j = m−1, …, 1`, each grown from the previous layer.
pub fn influence_set<E: Environment + ?Sized>(
    env: &E,
    base: &VertexSet,
    t: f64,
) -> Result<InfluenceSet> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if base.is_empty() {
        return Err(Error::EmptySet);
    }
    check_inside(env.window(), base)?;
    let d = env.window().dim();
    let width = 1.0 / (2 * d) as f64;
    let m = layer_count(t, d);
    let mut layers = vec![];
    let mut current = base.clone();
    if m > 0 {
        current = grow(env, current, (m - 1) as f64 * width, t, None);
        layers.push(current.clone());
        for j in (1..m).rev() {
            current = grow(env, current, (j - 1) as f64 * width, j as f64 * width, None);
            layers.push(current.clone());
        }
    } else {
        layers.push(current.clone());
    }
    let radius = current
        .iter()
        .map(|x| distance_to_set(x, base))
        .max()
        .unwrap_or(0);
    Ok(InfluenceSet {
        base: base.clone(),
        t_bits: t.to_bits(),
        layers,
        union: current,
        radius,
    })
}

fn require_ball_inside(window: &Window, base: &VertexSet, r: u32) -> Result<()> {
    // the L1 ball of radius r around p sits inside the sup-ball of radius r
    match base.iter().find(|p| !window.contains_with_margin(p, r)) {
        Some(p) => Err(Error::MarginViolation(format!(
            "{p} is closer than {r} to the window boundary"
        ))),
        None => Ok(()),
    }
}

/// `Ξ_{Λ,t,r}`: whether `𝓘_t(Λ) ⊆ B_r(Λ)`.
pub fn xi_holds<E: Environment + ?Sized>(
    env: &E,
    base: &VertexSet,
    t: f64,
    r: u32,
) -> Result<bool> {
    require_ball_inside(env.window(), base, r + 1)?;
    Ok(influence_set(env, base, t)?.radius <= u64::from(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalityOutcome {
    NotApplicable,
    Pass,
    Fail,
}

/// Sample `(κ, U)` on `window`; if `Ξ_{Λ,t,r}` holds, redraw everything
/// outside `B_{r+1}(Λ)` and its induced edges from an independent stream,
/// re-run the dynamics, and compare `ω_t` on `𝓔(Λ)`.
pub fn locality_check(
    seed: &SeedSpec,
    law: &ConstraintLaw,
    base: &VertexSet,
    t: f64,
    r: u32,
    window: &Window,
) -> Result<LocalityOutcome> {
    require_ball_inside(window, base, 3 * r)?;
    let env = EnvironmentField::sample(seed, window, law);
    if !xi_holds(&env, base, t, r)? {
        return Ok(LocalityOutcome::NotApplicable);
    }
    let keep = l1_ball(base, r + 1);
    let fresh = EnvironmentField::sample(&seed.fork(RESAMPLE_SALT), window, law);
    let spliced = env.splice(&fresh, &keep)?;
    let (a, b) = (evolve(&env).config_at(t)?, evolve(&spliced).config_at(t)?);
    let same = edge_set(base).iter().all(|e| a.is_open(e) == b.is_open(e));
    Ok(if same {
        LocalityOutcome::Pass
    } else {
        LocalityOutcome::Fail
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LocalityBatch {
    pub instances: u64,
    pub not_applicable: u64,
    pub passes: u64,
    pub fails: u64,
}

/// Runs [`locality_check`] on replicates `0..n` of `master_seed`, with a
/// window of sup-radius `3r` around the bounding box of `Λ`.
pub fn locality_batch(
    master_seed: u64,
    law: &ConstraintLaw,
    base: &VertexSet,
    t: f64,
    r: u32,
    n: u64,
) -> Result<LocalityBatch> {
    let window = Window::bounding(base)?.padded(3 * r);
    let outcomes: Result<Vec<LocalityOutcome>> = (0..n)
        .into_par_iter()
        .map(|rep| locality_check(&SeedSpec::new(master_seed, rep), law, base, t, r, &window))
        .collect();
    let mut batch = LocalityBatch {
        instances: n,
        ..Default::default()
    };
    for o in outcomes? {
        match o {
            LocalityOutcome::NotApplicable => batch.not_applicable += 1,
            LocalityOutcome::Pass => batch.passes += 1,
            LocalityOutcome::Fail => batch.fails += 1,
        }
    }
    Ok(batch)
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub r: u32,
    /// Samples with `rad_v(𝓘_1(v)) > r`.
    pub survivors: u64,
    pub survival: f64,
    /// `c2·e^{−4ψr}`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusTail {
    pub n: u64,
    pub r_max: u32,
    pub rows: Vec<TailRow>,
    /// `(intercept, slope)` of `ln survival` against `r`.
    pub fit: Option<(f64, f64)>,
    /// Inclusive radius range used by the fit.
    pub fit_range: Option<(u32, u32)>,
    /// Mean of `|𝓘_1(v)|` (sets reaching the window edge are counted as clipped).
    pub mean_size: f64,
    /// Samples whose influence set reached the window boundary.
    pub clipped: u64,
}

/// Empirical survival function of `rad_v(𝓘_1(v))` for `r = 0..=r_max`.
///
/// Clocks are hashed lazily on a window of sup-radius `2·r_max`, which
/// contains every path that can leave `B_r(v)` for `r ≤ r_max`; the survival
/// counts are therefore exact, not window-biased.
pub fn radius_tail(master_seed: u64, v: Point, r_max: u32, n: u64) -> Result<RadiusTail> {
    let r_max = r_max.max(1);
    let d = v.dim();
    let window = Window::cube(v, 2 * r_max);
    let law = ConstraintLaw::unconstrained(d);
    let base: VertexSet = [v].into_iter().collect();
    let samples: Vec<(u64, usize, bool)> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let env = LazyEnvironment::new(&SeedSpec::new(master_seed, rep), &window, &law);
            let inf = influence_set(&env, &base, 1.0).expect("v lies in its own window");
            let clipped = inf.union.iter().any(|p| window.on_boundary(p));
            (inf.radius, inf.union.len(), clipped)
        })
        .collect();
    let (c2, psi) = (bounds::c2(d), bounds::psi(d));
    let rows: Vec<TailRow> = (0..=r_max)
        .map(|r| {
            let survivors = samples.iter().filter(|s| s.0 > u64::from(r)).count() as u64;
            TailRow {
                r,
                survivors,
                survival: survivors as f64 / n.max(1) as f64,
                bound: c2 * (-4.0 * psi * f64::from(r)).exp(),
            }
        })
        .collect();
    let usable: Vec<&TailRow> = rows
        .iter()
        .skip(1)
        .take_while(|row| row.survivors >= FIT_MIN_SURVIVORS)
        .collect();
    let xs: Vec<f64> = usable.iter().map(|row| f64::from(row.r)).collect();
    let ys: Vec<f64> = usable.iter().map(|row| row.survival.ln()).collect();
    let fit = linear_fit(&xs, &ys);
    let fit_range = fit.map(|_| (usable[0].r, usable[usable.len() - 1].r));
    Ok(RadiusTail {
        n,
        r_max,
        mean_size: samples.iter().map(|s| s.1 as f64).sum::<f64>() / n.max(1) as f64,
        clipped: samples.iter().filter(|s| s.2).count() as u64,
        rows,
        fit,
        fit_range,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecouplingReport {
    pub event1: String,
    pub event2: String,
    pub separation: u64,
    pub boundary1: usize,
    pub boundary2: usize,
    pub t: f64,
    pub n: u64,
    pub p1: Estimate,
    pub p2: Estimate,
    pub p12: Estimate,
    pub cov_hat: f64,
    pub se: f64,
    /// `c3·(|∂Λ1|+|∂Λ2|)·e^{−ψδ}`.
    pub bound: f64,
}

impl DecouplingReport {
    pub fn within_bound(&self) -> bool {
        self.cov_hat.abs() - 3.0 * self.se <= self.bound
    }
}

fn check_event_support(event: &LocalEvent, region: &VertexSet) -> Result<()> {
    for e in event.edges() {
        let (u, v) = e.endpoints();
        if !region.contains(&u) || !region.contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "event '{}' uses edge {e} outside its region",
                event.label()
            )));
        }
    }
    Ok(())
}

/// Estimates `Cov(1_{A1}, 1_{A2})` from joint replicates and sets it against
/// the decoupling bound. Each replicate evaluates both events by causal
/// recursion on a lazily hashed environment covering both regions plus `pad`.
#[allow(clippy::too_many_arguments)]
pub fn decoupling_estimate(
    master_seed: u64,
    law: &ConstraintLaw,
    t: f64,
    region1: &VertexSet,
    region2: &VertexSet,
    event1: &LocalEvent,
    event2: &LocalEvent,
    n: u64,
    pad: u32,
) -> Result<DecouplingReport> {
    law.require_ordinary()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if let Some(p) = region1.intersection(region2).next() {
        return Err(Error::Overlap(format!("regions share {p}")));
    }
    check_event_support(event1, region1)?;
    check_event_support(event2, region2)?;
    let b1 = boundaries(region1)?.inner.len();
    let b2 = boundaries(region2)?.inner.len();
    let window = Window::bounding(region1.iter().chain(region2))?.padded(pad);

    let pairs: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let env = LazyEnvironment::new(&SeedSpec::new(master_seed, rep), &window, law);
            let mut eval = CausalEvaluator::new(&env);
            (
                event1.evaluate_causal(&mut eval, t),
                event2.evaluate_causal(&mut eval, t),
            )
        })
        .collect();

    let p1 = Estimate::from_indicators(pairs.iter().map(|p| p.0));
    let p2 = Estimate::from_indicators(pairs.iter().map(|p| p.1));
    let p12 = Estimate::from_indicators(pairs.iter().map(|p| p.0 && p.1));
    let cov_hat = p12.p_hat - p1.p_hat * p2.p_hat;
    let nf = n.max(1) as f64;
    let products: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| (f64::from(u8::from(*a)) - p1.p_hat) * (f64::from(u8::from(*b)) - p2.p_hat))
        .collect();
    let mean = products.iter().sum::<f64>() / nf;
    let var = products.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
    let separation = set_distance(region1, region2);
    let d = window.dim();
    Ok(DecouplingReport {
        event1: event1.label().to_string(),
        event2: event2.label().to_string(),
        separation,
        boundary1: b1,
        boundary2: b2,
        t,
        n,
        p1,
        p2,
        p12,
        cov_hat,
        se: (var / nf).sqrt(),
        bound: bounds::c3(d) * (b1 + b2) as f64 * (-bounds::psi(d) * separation as f64).exp(),
    })
}

/// `rad_v(Λ) = max_{x∈Λ} δ(x, v)`.
pub fn rad(v: &Point, set: &VertexSet) -> Result<u64> {
    set.iter()
        .map(|x| l1_distance(x, v))
        .try_fold(0, |m, d| Ok(m.max(d?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Edge;

    fn set(points: &[(i32, i32)]) -> VertexSet {
        points.iter().map(|&(x, y)| Point::xy(x, y)).collect()
    }

    fn constant_env(r: u32, clock: f64) -> EnvironmentField {
        EnvironmentField::constant(&Window::cube(Point::xy(0, 0), r), 3, clock)
    }

    #[test]
    fn hand_traced_cluster() {
        let mut env = constant_env(6, 0.9);
        env.set_clock(&Edge::new(Point::xy(0, 0), 0), 0.3).unwrap();
        env.set_clock(&Edge::new(Point::xy(1, 0), 0), 0.3).unwrap();
        let base = set(&[(0, 0)]);
        let c = interval_cluster(&env, &base, 0.25, 0.5, None).unwrap();
        assert_eq!(c, set(&[(0, 0), (1, 0), (2, 0)]));
        assert_eq!(interval_cluster(&env, &base, 0.3, 0.3, None).unwrap(), base);
        assert_eq!(interval_cluster(&env, &base, 0.0, 0.2, None).unwrap(), base);
        let restricted =
            interval_cluster(&env, &base, 0.25, 0.5, Some(&set(&[(0, 0), (1, 0)]))).unwrap();
        assert_eq!(restricted, set(&[(0, 0), (1, 0)]));
        assert!(interval_cluster(&env, &set(&[(40, 0)]), 0.0, 1.0, None).is_err());
    }

    #[test]
    fn influence_examples() {
        let env = constant_env(8, 0.9);
        let base = set(&[(0, 0), (1, 0)]);
        let half = influence_set(&env, &base, 0.5).unwrap();
        assert_eq!(half.union, base);
        assert_eq!(half.layers.len(), 2);
        let zero = influence_set(&env, &base, 0.0).unwrap();
        assert_eq!(zero.union, base);
        assert!(xi_holds(&env, &base, 0.5, 0).unwrap());
        assert!(xi_holds(&env, &base, 0.0, 0).unwrap());
        assert!(matches!(
            xi_holds(&env, &base, 0.5, 7),
            Err(Error::MarginViolation(_))
        ));
    }

    #[test]
    fn layer_boundaries_are_half_open() {
        assert_eq!(layer_count(0.0, 2), 0);
        assert_eq!(layer_count(0.25, 2), 1);
        assert_eq!(layer_count(0.2500001, 2), 2);
        assert_eq!(layer_count(1.0, 2), 4);
        // a clock exactly at 1/4 belongs to the first interval (0, 1/4]
        let mut env = constant_env(4, 0.9);
        env.set_clock(&Edge::new(Point::xy(0, 0), 0), 0.25).unwrap();
        let base = set(&[(0, 0)]);
        assert_eq!(influence_set(&env, &base, 0.25).unwrap().union.len(), 2);
        assert_eq!(influence_set(&env, &base, 0.2).unwrap().union.len(), 1);
    }

    #[test]
    fn escape_path_breaks_xi() {
        let mut env = constant_env(20, 0.9);
        for x in 0..15 {
            env.set_clock(&Edge::new(Point::xy(x, 0), 0), 0.1).unwrap();
        }
        let base = set(&[(0, 0)]);
        assert!(!xi_holds(&env, &base, 0.5, 3).unwrap());
        assert_eq!(influence_set(&env, &base, 0.5).unwrap().radius, 15);
    }

    #[test]
    fn layers_nest_and_sets_grow() {
        let law = ConstraintLaw::new(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let w = Window::cube(Point::xy(0, 0), 12);
        let small = set(&[(0, 0)]);
        let big = set(&[(0, 0), (0, 1), (1, 1)]);
        for rep in 0..40 {
            let env = LazyEnvironment::new(&SeedSpec::new(3, rep), &w, &law);
            let one = influence_set(&env, &small, 1.0).unwrap();
            for t in [0.1, 0.25, 0.6, 0.9] {
                let it = influence_set(&env, &small, t).unwrap();
                assert!(it.layers.windows(2).all(|p| p[0].is_subset(&p[1])));
                assert!(it.union.is_subset(&one.union));
                assert!(small.is_subset(&it.union));
                let ib = influence_set(&env, &big, t).unwrap();
                assert!(it.union.is_subset(&ib.union));
            }
        }
    }

    #[test]
    fn locality_holds_on_small_batch() {
        let law = ConstraintLaw::new(&[0.05, 0.15, 0.3, 0.5]).unwrap();
        let base = set(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let batch = locality_batch(9, &law, &base, 0.8, 6, 100).unwrap();
        assert_eq!(batch.fails, 0);
        assert!(batch.passes > 0);
        let zero = locality_batch(9, &law, &base, 0.0, 2, 10).unwrap();
        assert_eq!(zero.passes, 10);
    }

    #[test]
    fn radius_tail_shape() {
        let tail = radius_tail(5, Point::xy(0, 0), 12, 2_000).unwrap();
        assert!(tail
            .rows
            .windows(2)
            .all(|w| w[1].survivors <= w[0].survivors));
        assert!(tail.rows.iter().all(|r| r.survival <= r.bound));
        // r = 0 row: influence set is more than {v}
        let w = Window::cube(Point::xy(0, 0), 24);
        let law = ConstraintLaw::unconstrained(2);
        let base = set(&[(0, 0)]);
        let nontrivial = (0..2_000)
            .filter(|rep| {
                let env = LazyEnvironment::new(&SeedSpec::new(5, *rep), &w, &law);
                influence_set(&env, &base, 1.0).unwrap().union.len() > 1
            })
            .count() as u64;
        assert_eq!(tail.rows[0].survivors, nontrivial);
    }

    #[test]
    fn decoupling_sure_event_has_zero_covariance() {
        let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5]).unwrap();
        let r1 = set(&[(0, 0), (1, 0)]);
        let r2 = set(&[(10, 0), (11, 0)]);
        let e2 = LocalEvent::edge_open(Edge::new(Point::xy(10, 0), 0));
        let sure = LocalEvent::always(vec![Edge::new(Point::xy(0, 0), 0)]);
        let rep = decoupling_estimate(1, &law, 0.7, &r1, &r2, &sure, &e2, 2_000, 8).unwrap();
        assert_eq!(rep.cov_hat, 0.0);
        assert!(rep.within_bound());
        assert!(decoupling_estimate(1, &law, 0.7, &r1, &r1, &sure, &e2, 10, 8).is_err());
        let outside = LocalEvent::edge_open(Edge::new(Point::xy(5, 0), 0));
        assert!(decoupling_estimate(1, &law, 0.7, &r1, &r2, &outside, &e2, 10, 8).is_err());
    }

    #[test]
    fn rad_is_max_distance() {
        assert_eq!(
            rad(&Point::xy(0, 0), &set(&[(0, 0), (2, -3), (1, 1)])).unwrap(),
            5
        );
    }
}
