//! Random constraints and clocks.
//!
//! Every uniform variable is a pure function of `(master seed, replicate,
//! stream, coordinates)`: a counter-based generator built from the SplitMix64
//! finaliser. Consequently a vertex or an edge sees the same value whatever
//! window it is sampled in and whatever order entities are visited, and two
//! sampling calls never disagree on their common support.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CausalEvaluator, LocalEvent};
use crate::error::{Error, Result};
use crate::lattice::{Edge, Point, VertexSet, Window};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(h: u64, word: u64) -> u64 {
    mix(h ^ word
        .wrapping_add(GOLDEN)
        .wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Maps 53 high bits into the open interval (0, 1).
#[inline]
fn to_unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Named random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    /// `X(v)`, from which constraints are derived.
    VertexUniforms,
    /// `U(e)`, the edge clocks.
    EdgeClocks,
    /// Free-form auxiliary stream.
    Aux(u32),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::VertexUniforms => 0x7665_7274,
            Stream::EdgeClocks => 0x6564_6765,
            Stream::Aux(k) => 0x6175_7800_0000_0000 | u64::from(k),
        }
    }
}

/// Identifies one replicate's randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replicate: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        SeedSpec {
            master_seed,
            replicate,
        }
    }

    pub fn with_replicate(&self, replicate: u64) -> Self {
        SeedSpec { replicate, ..*self }
    }

    /// An unrelated seed, used to draw fresh variables for resampling.
    pub fn fork(&self, salt: u64) -> Self {
        SeedSpec {
            master_seed: absorb(absorb(self.master_seed, 0x666f_726b), salt),
            replicate: self.replicate,
        }
    }

    fn prefix(&self, stream: Stream) -> u64 {
        absorb(
            absorb(absorb(GOLDEN, self.master_seed), self.replicate),
            stream.tag(),
        )
    }

    /// Uniform in (0, 1) attached to `key` within `stream`.
    pub fn uniform(&self, stream: Stream, key: &[i64]) -> f64 {
        let mut h = self.prefix(stream);
        for k in key {
            h = absorb(h, *k as u64);
        }
        to_unit(h)
    }

    pub fn hasher(&self, stream: Stream) -> StreamHasher {
        StreamHasher {
            prefix: self.prefix(stream),
        }
    }

    pub fn vertex_uniform(&self, p: &Point) -> f64 {
        self.hasher(Stream::VertexUniforms).point(p)
    }

    pub fn edge_clock(&self, e: &Edge) -> f64 {
        self.hasher(Stream::EdgeClocks).edge(e)
    }
}

/// A stream with its seed prefix already absorbed.
#[derive(Clone, Copy, Debug)]
pub struct StreamHasher {
    prefix: u64,
}

impl StreamHasher {
    #[inline]
    pub fn point(&self, p: &Point) -> f64 {
        let mut h = self.prefix;
        for c in p.coords() {
            h = absorb(h, i64::from(*c) as u64);
        }
        to_unit(h)
    }

    #[inline]
    pub fn edge(&self, e: &Edge) -> f64 {
        let mut h = self.prefix;
        for c in e.base.coords() {
            h = absorb(h, i64::from(*c) as u64);
        }
        to_unit(absorb(h, u64::from(e.axis)))
    }

    #[inline]
    pub fn index(&self, i: u64) -> f64 {
        to_unit(absorb(self.prefix, i))
    }
}

/// Law of a vertex constraint: `rho[j]` is the probability of constraint `j`.
///
/// Ordinary laws have `2d` entries. A validation law has one more entry, the
/// sentinel value `2d` meaning "unconstrained"; it exists only to compare the
/// dynamics with plain Bernoulli percolation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintLaw {
    dim: usize,
    rho: Vec<f64>,
    cumulative: Vec<f64>,
    validation: bool,
}

impl ConstraintLaw {
    /// A law on `{0, …, 2d−1}` from `2d` probabilities.
    pub fn new(rho: &[f64]) -> Result<Self> {
        if rho.len() < 2 || !rho.len().is_multiple_of(2) {
            return Err(Error::InvalidLaw(format!(
                "expected 2d probabilities, got {}",
                rho.len()
            )));
        }
        Self::build(rho.len() / 2, rho, false)
    }

    /// Validation-mode law over `{0, …, 2d}` (the last value is the sentinel).
    pub fn with_sentinel(dim: usize, rho: &[f64]) -> Result<Self> {
        if rho.len() != 2 * dim + 1 {
            return Err(Error::InvalidLaw(format!(
                "validation law needs {} entries, got {}",
                2 * dim + 1,
                rho.len()
            )));
        }
        Self::build(dim, rho, true)
    }

    /// All vertices unconstrained: the dynamics reduces to Bernoulli(t).
    pub fn unconstrained(dim: usize) -> Self {
        let mut rho = vec![0.0; 2 * dim + 1];
        rho[2 * dim] = 1.0;
        Self::build(dim, &rho, true).expect("valid")
    }

    pub fn point_mass(dim: usize, value: usize) -> Result<Self> {
        let mut rho = vec![0.0; 2 * dim];
        if value >= rho.len() {
            return Err(Error::InvalidLaw(format!(
                "constraint {value} outside 0..{}",
                2 * dim
            )));
        }
        rho[value] = 1.0;
        Self::build(dim, &rho, false)
    }

    fn build(dim: usize, rho: &[f64], validation: bool) -> Result<Self> {
        if dim == 0 || dim > crate::lattice::MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if let Some(bad) = rho.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidLaw(format!(
                "negative or non-finite entry {bad}"
            )));
        }
        let total: f64 = rho.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}")));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = rho
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().expect("nonempty") = 1.0;
        Ok(ConstraintLaw {
            dim,
            rho: rho.to_vec(),
            cumulative,
            validation,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn is_validation(&self) -> bool {
        self.validation
    }

    pub fn mean(&self) -> f64 {
        self.rho.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    /// The coupling map `X ↦ κ`: half-open cells `[ρ̄_{j−1}, ρ̄_j)`, with
    /// `x = 1` assigned to the largest value of positive mass.
    #[inline]
    pub fn constraint_of(&self, x: f64) -> u8 {
        for (j, c) in self.cumulative.iter().enumerate() {
            if x < *c {
                return j as u8;
            }
        }
        self.rho
            .iter()
            .rposition(|p| *p > 0.0)
            .expect("law has positive mass") as u8
    }

    /// Reject the sentinel outside validation code paths.
    pub fn require_ordinary(&self) -> Result<()> {
        if self.validation {
            Err(Error::InvalidLaw(
                "the unconstrained sentinel is only allowed in validation runs".into(),
            ))
        } else {
            Ok(())
        }
    }
}

pub fn constraint_from_uniform(x: f64, law: &ConstraintLaw) -> Result<u8> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            what: "coupling uniform",
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(law.constraint_of(x))
}

/// Read access to clocks and constraints on a window.
pub trait Environment {
    fn window(&self) -> &Window;
    /// Clock of an edge inside the window.
    fn clock(&self, e: &Edge) -> f64;
    /// Constraint of a vertex inside the window.
    fn constraint(&self, v: &Point) -> u8;
}

/// Fully materialised environment on a window.
#[derive(Clone, Debug)]
pub struct EnvironmentField {
    window: Window,
    x: Vec<f64>,
    kappa: Vec<u8>,
    clocks: Vec<f64>,
}

impl EnvironmentField {
    pub fn sample(seed: &SeedSpec, window: &Window, law: &ConstraintLaw) -> Self {
        let vh = seed.hasher(Stream::VertexUniforms);
        let eh = seed.hasher(Stream::EdgeClocks);
        let x: Vec<f64> = window.vertices().map(|p| vh.point(&p)).collect();
        let kappa = x.iter().map(|u| law.constraint_of(*u)).collect();
        let mut clocks = vec![f64::NAN; window.slot_count()];
        for slot in window.slots() {
            let e = window.edge_at(slot).expect("valid slot");
            clocks[slot] = eh.edge(&e);
        }
        EnvironmentField {
            window: window.clone(),
            x,
            kappa,
            clocks,
        }
    }

    /// A hand-built environment with uniform constraint and clock values.
    pub fn constant(window: &Window, kappa: u8, clock: f64) -> Self {
        let mut clocks = vec![f64::NAN; window.slot_count()];
        for slot in window.slots() {
            clocks[slot] = clock;
        }
        EnvironmentField {
            window: window.clone(),
            x: vec![f64::NAN; window.vertex_count()],
            kappa: vec![kappa; window.vertex_count()],
            clocks,
        }
    }

    pub fn set_clock(&mut self, e: &Edge, u: f64) -> Result<()> {
        let slot = self
            .window
            .slot_of(e)
            .ok_or_else(|| Error::OutsideWindow(e.to_string()))?;
        self.clocks[slot] = u;
        Ok(())
    }

    pub fn set_constraint(&mut self, v: &Point, k: u8) -> Result<()> {
        let i = self
            .window
            .index_of(v)
            .ok_or_else(|| Error::OutsideWindow(v.to_string()))?;
        self.kappa[i] = k;
        Ok(())
    }

    /// Same uniforms `X`, constraints recomputed under another law.
    pub fn relabel(&self, law: &ConstraintLaw) -> Result<Self> {
        if self.x.iter().any(|u| u.is_nan()) {
            return Err(Error::InvalidParameter(
                "hand-built environment has no coupling uniforms".into(),
            ));
        }
        Ok(EnvironmentField {
            kappa: self.x.iter().map(|u| law.constraint_of(*u)).collect(),
            ..self.clone()
        })
    }

    /// Keep the variables attached to `keep` and to `𝓔(keep)`, take all
    /// others from `fresh` (which must live on the same window).
    pub fn splice(&self, fresh: &EnvironmentField, keep: &VertexSet) -> Result<Self> {
        if fresh.window != self.window {
            return Err(Error::InvalidParameter(
                "splice needs identical windows".into(),
            ));
        }
        let keep_idx: HashSet<usize> = keep
            .iter()
            .filter_map(|p| self.window.index_of(p))
            .collect();
        let mut out = self.clone();
        for v in 0..self.window.vertex_count() {
            if !keep_idx.contains(&v) {
                out.x[v] = fresh.x[v];
                out.kappa[v] = fresh.kappa[v];
            }
        }
        for slot in self.window.slots() {
            let (u, v) = self.window.slot_endpoints(slot);
            if !(keep_idx.contains(&u) && keep_idx.contains(&v)) {
                out.clocks[slot] = fresh.clocks[slot];
            }
        }
        Ok(out)
    }

    /// Replace the coupling uniform of vertex `index` and its constraint.
    pub fn set_vertex_uniform(&mut self, index: usize, x: f64, law: &ConstraintLaw) {
        self.x[index] = x;
        self.kappa[index] = law.constraint_of(x);
    }

    pub fn set_slot_clock(&mut self, slot: usize, u: f64) {
        self.clocks[slot] = u;
    }

    pub fn uniforms(&self) -> &[f64] {
        &self.x
    }

    /// Constraints indexed by window vertex index.
    pub fn constraints(&self) -> &[u8] {
        &self.kappa
    }

    /// Clocks indexed by slot (`NaN` for slots that are not edges).
    pub fn clocks(&self) -> &[f64] {
        &self.clocks
    }

    pub fn x(&self, v: &Point) -> Option<f64> {
        self.window.index_of(v).map(|i| self.x[i])
    }
}

impl Environment for EnvironmentField {
    fn window(&self) -> &Window {
        &self.window
    }

    fn clock(&self, e: &Edge) -> f64 {
        self.clocks[self.window.slot_of(e).expect("edge inside window")]
    }

    fn constraint(&self, v: &Point) -> u8 {
        self.kappa[self.window.index_of(v).expect("vertex inside window")]
    }
}

/// The same randomness as [`EnvironmentField::sample`], evaluated on demand.
/// Suited to huge windows where only a neighbourhood is ever inspected.
#[derive(Clone, Debug)]
pub struct LazyEnvironment {
    window: Window,
    law: ConstraintLaw,
    vertices: StreamHasher,
    clocks: StreamHasher,
}

impl LazyEnvironment {
    pub fn new(seed: &SeedSpec, window: &Window, law: &ConstraintLaw) -> Self {
        LazyEnvironment {
            window: window.clone(),
            law: law.clone(),
            vertices: seed.hasher(Stream::VertexUniforms),
            clocks: seed.hasher(Stream::EdgeClocks),
        }
    }

    pub fn x(&self, v: &Point) -> f64 {
        self.vertices.point(v)
    }
}

impl Environment for LazyEnvironment {
    fn window(&self) -> &Window {
        &self.window
    }

    fn clock(&self, e: &Edge) -> f64 {
        self.clocks.edge(e)
    }

    fn constraint(&self, v: &Point) -> u8 {
        self.law.constraint_of(self.vertices.point(v))
    }
}

/// `sample_environment` under its operational name.
pub fn sample_environment(
    seed: &SeedSpec,
    window: &Window,
    law: &ConstraintLaw,
) -> EnvironmentField {
    EnvironmentField::sample(seed, window, law)
}

/// One point `(ρ, t)` of a coupled parameter grid.
#[derive(Clone, Debug)]
pub struct GridCell {
    pub law: ConstraintLaw,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledGrid {
    pub replicates: usize,
    /// Empirical probability of the event in each cell.
    pub means: Vec<f64>,
    /// Fraction of replicates whose indicator differs between cell `i` and `i + 1`.
    pub flip_rates: Vec<f64>,
}

/// Estimate an event over a grid of `(ρ, t)` values, reusing one draw of
/// `(X, U)` per replicate for every cell.
pub fn coupled_event_grid(
    master_seed: u64,
    window: &Window,
    cells: &[GridCell],
    event: &LocalEvent,
    replicates: usize,
    locality_radius: u32,
) -> Result<CoupledGrid> {
    for cell in cells {
        if !(0.0..=1.0).contains(&cell.t) {
            return Err(Error::OutOfRange {
                what: "t",
                value: cell.t,
                lo: 0.0,
                hi: 1.0,
            });
        }
        cell.law.require_ordinary()?;
        if cell.law.dim() != window.dim() {
            return Err(Error::DimensionMismatch {
                left: cell.law.dim(),
                right: window.dim(),
            });
        }
    }
    for e in event.edges() {
        let (u, v) = e.endpoints();
        if !window.contains_with_margin(&u, locality_radius)
            || !window.contains_with_margin(&v, locality_radius)
        {
            return Err(Error::MarginViolation(format!(
                "event edge {e} closer than {locality_radius} to the window boundary"
            )));
        }
    }

    let indicators: Vec<Vec<bool>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let seed = SeedSpec::new(master_seed, rep);
            cells
                .iter()
                .map(|cell| {
                    let env = LazyEnvironment::new(&seed, window, &cell.law);
                    let mut eval = CausalEvaluator::new(&env);
                    event.evaluate_causal(&mut eval, cell.t)
                })
                .collect()
        })
        .collect();

    let n = replicates.max(1) as f64;
    let means = (0..cells.len())
        .map(|c| indicators.iter().filter(|row| row[c]).count() as f64 / n)
        .collect();
    let flip_rates = (1..cells.len())
        .map(|c| indicators.iter().filter(|row| row[c] != row[c - 1]).count() as f64 / n)
        .collect();
    Ok(CoupledGrid {
        replicates,
        means,
        flip_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_map_examples() {
        let full3 = ConstraintLaw::new(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(constraint_from_uniform(0.999, &full3).unwrap(), 3);
        let half = ConstraintLaw::new(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(constraint_from_uniform(0.25, &half).unwrap(), 0);
        assert_eq!(constraint_from_uniform(0.5, &half).unwrap(), 1);
        assert_eq!(constraint_from_uniform(1.0, &half).unwrap(), 1);
        assert_eq!(constraint_from_uniform(0.0, &full3).unwrap(), 3);
        assert!(constraint_from_uniform(1.5, &half).is_err());
    }

    #[test]
    fn law_validation() {
        assert!(ConstraintLaw::new(&[0.5, 0.6, 0.0, 0.0]).is_err());
        assert!(ConstraintLaw::new(&[-0.1, 1.1, 0.0, 0.0]).is_err());
        assert!(ConstraintLaw::new(&[1.0, 0.0, 0.0]).is_err());
        let l = ConstraintLaw::new(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(*l.cumulative().last().unwrap(), 1.0);
        assert!(l.require_ordinary().is_ok());
        assert!(ConstraintLaw::unconstrained(2).require_ordinary().is_err());
        assert_eq!(ConstraintLaw::unconstrained(2).constraint_of(0.3), 4);
    }

    #[test]
    fn sampling_is_deterministic_and_window_stable() {
        let seed = SeedSpec::new(7, 3);
        let law = ConstraintLaw::new(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let small = Window::new(&[0, 0], &[5, 5]).unwrap();
        let big = Window::new(&[-4, -2], &[9, 8]).unwrap();
        let a = EnvironmentField::sample(&seed, &small, &law);
        let b = EnvironmentField::sample(&seed, &small, &law);
        assert_eq!(a.clocks().len(), b.clocks().len());
        assert!(a
            .clocks()
            .iter()
            .zip(b.clocks())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = EnvironmentField::sample(&seed, &big, &law);
        let lazy = LazyEnvironment::new(&seed, &big, &law);
        for p in small.vertices() {
            assert_eq!(a.constraint(&p), c.constraint(&p));
            assert_eq!(a.x(&p), c.x(&p));
            assert_eq!(a.constraint(&p), lazy.constraint(&p));
        }
        for e in small.edges() {
            assert_eq!(a.clock(&e), c.clock(&e));
            assert_eq!(a.clock(&e), lazy.clock(&e));
        }
        let other = EnvironmentField::sample(&seed.with_replicate(4), &small, &law);
        assert!(a
            .clocks()
            .iter()
            .zip(other.clocks())
            .any(|(x, y)| x != y && !x.is_nan()));
    }

    #[test]
    fn mean_constraint_law_of_large_numbers() {
        let seed = SeedSpec::new(11, 0);
        let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5]).unwrap();
        let w = Window::new(&[0, 0], &[316, 316]).unwrap();
        let env = EnvironmentField::sample(&seed, &w, &law);
        assert!(env.constraints().len() >= 100_000);
        let mean = env.constraints().iter().map(|k| f64::from(*k)).sum::<f64>()
            / env.constraints().len() as f64;
        assert!((mean - 2.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn splice_keeps_inside_and_replaces_outside() {
        let seed = SeedSpec::new(1, 0);
        let law = ConstraintLaw::new(&[0.25; 4]).unwrap();
        let w = Window::new(&[-6, -6], &[6, 6]).unwrap();
        let env = EnvironmentField::sample(&seed, &w, &law);
        let fresh = EnvironmentField::sample(&seed.fork(1), &w, &law);
        let keep: VertexSet = Window::cube(Point::xy(0, 0), 2).vertices().collect();
        let s = env.splice(&fresh, &keep).unwrap();
        for p in w.vertices() {
            let expect = if keep.contains(&p) { &env } else { &fresh };
            assert_eq!(s.constraint(&p), expect.constraint(&p));
        }
        for e in w.edges() {
            let (u, v) = e.endpoints();
            let expect = if keep.contains(&u) && keep.contains(&v) {
                &env
            } else {
                &fresh
            };
            assert_eq!(s.clock(&e), expect.clock(&e));
        }
    }

    #[test]
    fn relabel_is_monotone_coupling() {
        let seed = SeedSpec::new(5, 0);
        let w = Window::new(&[0, 0], &[20, 20]).unwrap();
        let lo = ConstraintLaw::new(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let hi = ConstraintLaw::new(&[0.05, 0.1, 0.25, 0.6]).unwrap();
        let a = EnvironmentField::sample(&seed, &w, &lo);
        let b = a.relabel(&hi).unwrap();
        // stochastically larger law with dominated cumulative: pointwise larger
        assert!(a
            .constraints()
            .iter()
            .zip(b.constraints())
            .all(|(x, y)| x <= y));
        assert_eq!(a.clocks().len(), b.clocks().len());
    }
}
