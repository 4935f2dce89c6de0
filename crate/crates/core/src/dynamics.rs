//! The constrained-degree evolution.
//!
//! Edges attempt to open once, in increasing clock order, and succeed when
//! both endpoints are still strictly below their constraints. Since an
//! attempt only depends on strictly earlier clocks, a single sweep to horizon
//! 1 determines the configuration at every time `t`.
//!
//! Two engines compute the same function:
//! * [`evolve`] sorts every clock of a window and sweeps once;
//! * [`CausalEvaluator`] answers single-edge queries by recursing into
//!   adjacent edges with earlier clocks, touching only the causal past of the
//!   queried edges. It runs on any [`Environment`], including lazily hashed
//!   ones on very large windows.
//!
//! Clock ties are broken by canonical edge order in both engines.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::environment::{Environment, EnvironmentField};
use crate::error::{Error, Result};
use crate::lattice::{Edge, Point, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeOutcome {
    Opened,
    BlockedAtAttempt,
}

/// Complete history of a window under the dynamics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    window: Window,
    clocks: Vec<f64>,
    opened: Vec<bool>,
    degree: Vec<u8>,
    sequence: Vec<u32>,
}

impl Trajectory {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn outcome(&self, e: &Edge) -> Option<EdgeOutcome> {
        self.window.slot_of(e).map(|s| {
            if self.opened[s] {
                EdgeOutcome::Opened
            } else {
                EdgeOutcome::BlockedAtAttempt
            }
        })
    }

    pub fn clock(&self, e: &Edge) -> Option<f64> {
        self.window.slot_of(e).map(|s| self.clocks[s])
    }

    pub fn final_degree(&self, v: &Point) -> Option<u8> {
        self.window.index_of(v).map(|i| self.degree[i])
    }

    /// Final degrees indexed by window vertex index.
    pub fn final_degrees(&self) -> &[u8] {
        &self.degree
    }

    /// Slots of opened edges in opening order.
    pub fn opening_sequence(&self) -> &[u32] {
        &self.sequence
    }

    pub fn slot_clock(&self, slot: usize) -> f64 {
        self.clocks[slot]
    }

    pub fn slot_opened(&self, slot: usize) -> bool {
        self.opened[slot]
    }

    pub fn config_at(&self, t: f64) -> Result<Configuration> {
        config_at(self, t)
    }
}

/// The edge states `ω_t` on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    t: f64,
    window: Window,
    open: Vec<bool>,
}

impl Configuration {
    /// All edges closed.
    pub fn closed(window: &Window, t: f64) -> Self {
        Configuration {
            t,
            window: window.clone(),
            open: vec![false; window.slot_count()],
        }
    }

    /// All edges open.
    pub fn fully_open(window: &Window, t: f64) -> Self {
        let mut c = Self::closed(window, t);
        for s in window.slots() {
            c.open[s] = true;
        }
        c
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Edges outside the window count as closed.
    pub fn is_open(&self, e: &Edge) -> bool {
        self.window.slot_of(e).is_some_and(|s| self.open[s])
    }

    pub fn slot_open(&self, slot: usize) -> bool {
        self.open[slot]
    }

    pub fn set_open(&mut self, e: &Edge, open: bool) -> Result<()> {
        let s = self
            .window
            .slot_of(e)
            .ok_or_else(|| Error::OutsideWindow(e.to_string()))?;
        self.open[s] = open;
        Ok(())
    }

    pub fn open_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.window
            .slots()
            .filter(|s| self.open[*s])
            .map(|s| self.window.edge_at(s).expect("valid slot"))
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|o| **o).count()
    }

    pub fn degree(&self, v: &Point) -> Option<u8> {
        let i = self.window.index_of(v)?;
        Some(
            self.window
                .incident(i)
                .filter(|(s, _)| self.open[*s])
                .count() as u8,
        )
    }
}

fn sorted_slots(window: &Window, clocks: &[f64], horizon: f64) -> Vec<(u64, u32)> {
    // Clocks are nonnegative, so IEEE bit patterns order like the values.
    // They are also close to uniform, so a counting pass into one bucket per
    // item followed by tiny per-bucket sorts beats a comparison sort.
    let items: Vec<(u64, u32)> = window
        .slots()
        .filter(|s| clocks[*s] <= horizon)
        .map(|s| (clocks[s].to_bits(), s as u32))
        .collect();
    let n = items.len();
    if n < 64 {
        let mut order = items;
        order.sort_unstable();
        return order;
    }
    let bucket = |bits: u64| ((f64::from_bits(bits) * n as f64) as usize).min(n - 1);
    let mut start = vec![0usize; n + 1];
    for &(bits, _) in &items {
        start[bucket(bits) + 1] += 1;
    }
    for b in 0..n {
        start[b + 1] += start[b];
    }
    let mut fill = start.clone();
    let mut order = vec![(0u64, 0u32); n];
    for &item in &items {
        let b = bucket(item.0);
        order[fill[b]] = item;
        fill[b] += 1;
    }
    for b in 0..n {
        if start[b + 1] - start[b] > 1 {
            order[start[b]..start[b + 1]].sort_unstable();
        }
    }
    order
}

fn check_clocks(env: &EnvironmentField) {
    debug_assert!(env
        .window()
        .slots()
        .all(|s| env.clocks()[s] >= 0.0 && env.clocks()[s] <= 1.0));
}

/// Run the dynamics on the window to horizon 1.
pub fn evolve(env: &EnvironmentField) -> Trajectory {
    check_clocks(env);
    let window = env.window();
    let kappa = env.constraints();
    let clocks = env.clocks();
    let mut degree = vec![0u8; window.vertex_count()];
    let mut opened = vec![false; window.slot_count()];
    let mut sequence = Vec::new();
    for (_, slot) in sorted_slots(window, clocks, 1.0) {
        let slot = slot as usize;
        let (u, v) = window.slot_endpoints(slot);
        if degree[u] < kappa[u] && degree[v] < kappa[v] {
            degree[u] += 1;
            degree[v] += 1;
            opened[slot] = true;
            sequence.push(slot as u32);
        }
    }
    Trajectory {
        window: window.clone(),
        clocks: clocks.to_vec(),
        opened,
        degree,
        sequence,
    }
}

/// Run the dynamics only over clocks `≤ horizon`.
pub fn evolve_until(env: &EnvironmentField, horizon: f64) -> Configuration {
    let window = env.window();
    let kappa = env.constraints();
    let mut degree = vec![0u8; window.vertex_count()];
    let mut config = Configuration::closed(window, horizon);
    for (_, slot) in sorted_slots(window, env.clocks(), horizon) {
        let slot = slot as usize;
        let (u, v) = window.slot_endpoints(slot);
        if degree[u] < kappa[u] && degree[v] < kappa[v] {
            degree[u] += 1;
            degree[v] += 1;
            config.open[slot] = true;
        }
    }
    config
}

/// `ω_t` read off a trajectory: open iff opened and `U_e ≤ t`.
pub fn config_at(traj: &Trajectory, t: f64) -> Result<Configuration> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            what: "t",
            value: t,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let mut config = Configuration::closed(&traj.window, t);
    for &slot in &traj.sequence {
        let slot = slot as usize;
        if traj.clocks[slot] > t {
            break;
        }
        config.open[slot] = true;
    }
    Ok(config)
}

/// The dynamics on an arbitrary simple graph; returns the final open flag of
/// every edge. Ties are broken by edge index.
pub fn evolve_graph(kappa: &[u8], edges: &[(usize, usize)], clocks: &[f64]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_unstable_by(|a, b| {
        clocks[*a]
            .partial_cmp(&clocks[*b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    });
    run_in_order(kappa, edges, &order)
}

/// Attempt the listed edges in the given order.
pub fn run_in_order(kappa: &[u8], edges: &[(usize, usize)], order: &[usize]) -> Vec<bool> {
    let mut degree = vec![0u8; kappa.len()];
    let mut open = vec![false; edges.len()];
    for &i in order {
        let (u, v) = edges[i];
        if degree[u] < kappa[u] && degree[v] < kappa[v] {
            degree[u] += 1;
            degree[v] += 1;
            open[i] = true;
        }
    }
    open
}

#[inline]
fn precedes(cf: f64, f: &Edge, ce: f64, e: &Edge) -> bool {
    cf < ce || (cf == ce && f < e)
}

/// Single-edge queries of the dynamics, by memoised recursion into the
/// causal past.
pub struct CausalEvaluator<'a, E: Environment + ?Sized> {
    env: &'a E,
    memo: HashMap<Edge, bool>,
}

impl<'a, E: Environment + ?Sized> CausalEvaluator<'a, E> {
    pub fn new(env: &'a E) -> Self {
        CausalEvaluator {
            env,
            memo: HashMap::new(),
        }
    }

    /// Whether the edge opens at its own clock (its horizon-1 outcome).
    pub fn opened(&mut self, e: &Edge) -> bool {
        if let Some(b) = self.memo.get(e) {
            return *b;
        }
        let env = self.env;
        if !env.window().contains_edge(e) {
            return false;
        }
        let ce = env.clock(e);
        let (x, y) = e.endpoints();
        let ok = self.below_cap(&x, e, ce) && self.below_cap(&y, e, ce);
        self.memo.insert(*e, ok);
        ok
    }

    fn below_cap(&mut self, x: &Point, e: &Edge, ce: f64) -> bool {
        let env = self.env;
        let cap = env.constraint(x);
        if cap == 0 {
            return false;
        }
        let mut degree = 0u8;
        for f in x.incident_edges() {
            if f == *e || !env.window().contains_edge(&f) {
                continue;
            }
            let cf = env.clock(&f);
            if precedes(cf, &f, ce, e) && self.opened(&f) {
                degree += 1;
                if degree >= cap {
                    return false;
                }
            }
        }
        true
    }

    /// `ω_t(e)`.
    pub fn is_open_at(&mut self, e: &Edge, t: f64) -> bool {
        self.env.window().contains_edge(e) && self.env.clock(e) <= t && self.opened(e)
    }

    /// Number of edge outcomes resolved so far.
    pub fn resolved(&self) -> usize {
        self.memo.len()
    }
}

type Predicate = dyn Fn(&[bool]) -> bool + Send + Sync;

/// An event living on a finite edge set: a predicate on the states of
/// `edges`, listed in a fixed order.
#[derive(Clone)]
pub struct LocalEvent {
    label: String,
    edges: Vec<Edge>,
    predicate: Arc<Predicate>,
}

impl fmt::Debug for LocalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalEvent")
            .field("label", &self.label)
            .field("edges", &self.edges)
            .finish()
    }
}

impl LocalEvent {
    pub fn new(
        label: impl Into<String>,
        edges: Vec<Edge>,
        predicate: impl Fn(&[bool]) -> bool + Send + Sync + 'static,
    ) -> Self {
        LocalEvent {
            label: label.into(),
            edges,
            predicate: Arc::new(predicate),
        }
    }

    pub fn edge_open(e: Edge) -> Self {
        LocalEvent::new(format!("open{e}"), vec![e], |s| s[0])
    }

    pub fn all_open(edges: Vec<Edge>) -> Self {
        LocalEvent::new("all-open", edges, |s| s.iter().all(|b| *b))
    }

    pub fn any_open(edges: Vec<Edge>) -> Self {
        LocalEvent::new("any-open", edges, |s| s.iter().any(|b| *b))
    }

    /// The sure event, nominally living on `edges`.
    pub fn always(edges: Vec<Edge>) -> Self {
        LocalEvent::new("always", edges, |_| true)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn holds(&self, states: &[bool]) -> bool {
        (self.predicate)(states)
    }

    pub fn evaluate(&self, config: &Configuration) -> bool {
        let states: Vec<bool> = self.edges.iter().map(|e| config.is_open(e)).collect();
        self.holds(&states)
    }

    pub fn evaluate_causal<E: Environment + ?Sized>(
        &self,
        eval: &mut CausalEvaluator<'_, E>,
        t: f64,
    ) -> bool {
        let states: Vec<bool> = self.edges.iter().map(|e| eval.is_open_at(e, t)).collect();
        self.holds(&states)
    }
}
