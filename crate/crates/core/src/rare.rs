//! Rare-event probabilities by fixed-level splitting.
//!
//! Deep in the subcritical regimes (crossings at constraint 2, dual
//! crossings at constraint 3) the events of interest have probabilities far
//! below what direct sampling can resolve. A problem supplies an integer
//! score with `event ⇔ score ≥ target`; the estimator walks a ladder of
//! score levels, each time keeping the particles above the level, cloning
//! them back to full strength and decorrelating the clones with a Metropolis
//! kernel that redraws a few uniforms and accepts iff the score stays above
//! the level. That kernel leaves the conditioned product-uniform law
//! invariant, so the product of the level fractions is unbiased.
//!
//! Levels come from a pilot run on an independent stream; the reported
//! standard error is the spread over independent runs.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::evolve;
use crate::environment::{ConstraintLaw, EnvironmentField, SeedSpec, Stream};
use crate::error::{Error, Result};
use crate::lattice::{DualEdge, DualVertex, Point, Window};
use crate::renorm::annulus_primal_box;
use crate::union_find::UnionFind;

const PILOT_SALT: u64 = 0x9170;
const RUN_SALT: u64 = 0x5e11;
const MOVE_STREAM: u32 = 7;
const CLONE_STREAM: u32 = 8;

/// An event on a finite window expressed through an integer score.
pub trait SplittingProblem: Sync {
    fn window(&self) -> &Window;
    fn law(&self) -> &ConstraintLaw;
    fn score(&self, env: &EnvironmentField) -> u32;
    fn target(&self) -> u32;
    /// Sub-window whose variables the Metropolis moves redraw. Moves confined
    /// to a subset of the variables still leave the conditioned law
    /// invariant; they just spend the budget where the score reacts.
    fn focus(&self) -> Option<Window> {
        None
    }
}

/// Widest horizontal extent of an open cluster in the `L × L` box at time
/// `t`; a left–right crossing is extent `L − 1`.
#[derive(Clone, Debug)]
pub struct CrossingSpan {
    window: Window,
    law: ConstraintLaw,
    t: f64,
}

impl CrossingSpan {
    pub fn new(law: &ConstraintLaw, t: f64, l: u32) -> Result<Self> {
        if l < 4 {
            return Err(Error::OutOfRange {
                what: "L",
                value: f64::from(l),
                lo: 4.0,
                hi: f64::INFINITY,
            });
        }
        let hi = l as i32 - 1;
        Ok(CrossingSpan {
            window: Window::new(&[0, 0], &[hi, hi])?,
            law: law.clone(),
            t,
        })
    }
}

impl SplittingProblem for CrossingSpan {
    fn window(&self) -> &Window {
        &self.window
    }

    fn law(&self) -> &ConstraintLaw {
        &self.law
    }

    fn score(&self, env: &EnvironmentField) -> u32 {
        let w = &self.window;
        let traj = evolve(env);
        let nv = w.vertex_count();
        let xs: Vec<i32> = w.vertices().map(|p| p.coord(0)).collect();
        let (mut lo, mut hi) = (xs.clone(), xs);
        let mut uf = UnionFind::new(nv);
        let mut best = 0;
        for &slot in traj.opening_sequence() {
            let slot = slot as usize;
            if traj.slot_clock(slot) > self.t {
                break;
            }
            let (u, v) = w.slot_endpoints(slot);
            let (ru, rv) = (uf.find(u), uf.find(v));
            if ru == rv {
                continue;
            }
            uf.union(ru, rv);
            let r = uf.find(ru);
            lo[r] = lo[ru].min(lo[rv]);
            hi[r] = hi[ru].max(hi[rv]);
            best = best.max((hi[r] - lo[r]) as u32);
        }
        best
    }

    fn target(&self) -> u32 {
        self.window.extent(0) as u32 - 1
    }
}

/// How far (in sup-distance from the centre) a closed dual path started in
/// `B*_N` gets inside `B*_{2N}`; `A_N` is a score of `2N`.
#[derive(Clone, Debug)]
pub struct AnnulusReach {
    window: Window,
    law: ConstraintLaw,
    t: f64,
    n_box: u32,
}

impl AnnulusReach {
    /// Window `B_{2N+1+pad}(0)` with the annulus centred on the dual vertex `(0, 0)`.
    pub fn new(law: &ConstraintLaw, t: f64, n_box: u32, pad: u32) -> Result<Self> {
        if n_box == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        Ok(AnnulusReach {
            window: Window::cube(Point::xy(0, 0), 2 * n_box + 1 + pad),
            law: law.clone(),
            t,
            n_box,
        })
    }
}

/// Sup-distance reached from the ring `‖·‖∞ = N` by closed dual edges within
/// `N ≤ ‖·‖∞ ≤ 2N`. Every path from `B*_N` to `∂B*_{2N}` has such a tail.
pub fn annulus_reach(open: impl Fn(&crate::lattice::Edge) -> bool, n_box: u32) -> u32 {
    let x = DualVertex::new(0, 0);
    let n = n_box as i32;
    let ring = (-n..=n).flat_map(|i| {
        [
            DualVertex::new(i, -n),
            DualVertex::new(i, n),
            DualVertex::new(-n, i),
            DualVertex::new(n, i),
        ]
    });
    let mut best = n_box;
    let outer = 2 * n_box;
    let seen = crate::lattice::bfs(ring, |u: DualVertex| {
        u.neighbors()
            .into_iter()
            .filter(|v| {
                let r = v.linf(&x);
                r >= n_box
                    && r <= outer
                    && !open(&crate::lattice::primal_of(
                        &DualEdge::between(u, *v).expect("adjacent"),
                    ))
            })
            .collect::<Vec<_>>()
    });
    for v in &seen {
        best = best.max(v.linf(&x));
    }
    best
}

impl SplittingProblem for AnnulusReach {
    fn window(&self) -> &Window {
        &self.window
    }

    fn law(&self) -> &ConstraintLaw {
        &self.law
    }

    fn score(&self, env: &EnvironmentField) -> u32 {
        debug_assert!(self
            .window
            .contains(&annulus_primal_box(DualVertex::new(0, 0), self.n_box).hi()));
        let cfg = evolve(env)
            .config_at(self.t)
            .expect("t validated by caller");
        annulus_reach(|e| cfg.is_open(e), self.n_box)
    }

    fn target(&self) -> u32 {
        2 * self.n_box
    }

    fn focus(&self) -> Option<Window> {
        Some(annulus_primal_box(DualVertex::new(0, 0), self.n_box).padded(2))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingParams {
    pub particles: usize,
    /// Metropolis sweeps per level.
    pub moves: usize,
    /// Uniforms redrawn per proposal; `0` picks about 1/32 of the movable ones.
    pub block: usize,
    /// Independent runs behind the standard error.
    pub runs: usize,
    /// Target survival fraction per level in the pilot.
    pub p0: f64,
}

impl Default for SplittingParams {
    fn default() -> Self {
        SplittingParams {
            particles: 100,
            moves: 8,
            block: 0,
            runs: 4,
            p0: 0.3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingEstimate {
    pub levels: Vec<u32>,
    pub runs: Vec<f64>,
    pub mean: f64,
    pub se: f64,
    pub acceptance: f64,
}

struct Particle {
    env: EnvironmentField,
    score: u32,
}

struct Sampler<'a, P: SplittingProblem> {
    problem: &'a P,
    seed: SeedSpec,
    vertex_vars: Vec<usize>,
    edge_slots: Vec<usize>,
}

impl<'a, P: SplittingProblem> Sampler<'a, P> {
    fn new(problem: &'a P, seed: SeedSpec) -> Self {
        let w = problem.window();
        let degenerate = problem.law().rho().iter().filter(|p| **p > 0.0).count() <= 1;
        let focus = problem.focus();
        let inside = |p: &Point| focus.as_ref().is_none_or(|f| f.contains(p));
        let vertex_vars = if degenerate {
            vec![]
        } else {
            (0..w.vertex_count())
                .filter(|&i| inside(&w.point_at(i)))
                .collect()
        };
        let edge_slots = w
            .slots()
            .filter(|&s| {
                let (a, b) = w.edge_at(s).expect("valid slot").endpoints();
                inside(&a) && inside(&b)
            })
            .collect();
        Sampler {
            problem,
            seed,
            vertex_vars,
            edge_slots,
        }
    }

    fn fresh(&self, i: u64) -> Particle {
        let env = EnvironmentField::sample(
            &self.seed.with_replicate(i),
            self.problem.window(),
            self.problem.law(),
        );
        let score = self.problem.score(&env);
        Particle { env, score }
    }

    fn u(&self, stream: u32, key: &[i64]) -> f64 {
        self.seed.uniform(Stream::Aux(stream), key)
    }

    fn block(&self, params: &SplittingParams) -> usize {
        match params.block {
            0 => ((self.vertex_vars.len() + self.edge_slots.len()) / 32).max(1),
            b => b,
        }
    }

    /// `moves` Metropolis sweeps at `level`; returns accepted proposals.
    fn mutate(
        &self,
        p: &mut Particle,
        level: u32,
        moves: usize,
        block: usize,
        key: [i64; 2],
    ) -> u64 {
        let nv = self.vertex_vars.len();
        let nvars = nv + self.edge_slots.len();
        if nvars == 0 {
            return 0;
        }
        let law = self.problem.law();
        let mut accepted = 0;
        let mut undo: Vec<(usize, f64)> = Vec::with_capacity(block);
        for m in 0..moves {
            undo.clear();
            for j in 0..block {
                let k = [key[0], key[1], m as i64, j as i64];
                let pick = ((self.u(MOVE_STREAM, &[k[0], k[1], k[2], k[3], 0]) * nvars as f64)
                    as usize)
                    .min(nvars - 1);
                let value = self.u(MOVE_STREAM, &[k[0], k[1], k[2], k[3], 1]);
                if pick < nv {
                    let v = self.vertex_vars[pick];
                    undo.push((pick, p.env.uniforms()[v]));
                    p.env.set_vertex_uniform(v, value, law);
                } else {
                    let slot = self.edge_slots[pick - nv];
                    undo.push((pick, p.env.clocks()[slot]));
                    p.env.set_slot_clock(slot, value);
                }
            }
            let s = self.problem.score(&p.env);
            if s >= level {
                p.score = s;
                accepted += 1;
            } else {
                for &(pick, old) in undo.iter().rev() {
                    if pick < nv {
                        p.env.set_vertex_uniform(self.vertex_vars[pick], old, law);
                    } else {
                        p.env.set_slot_clock(self.edge_slots[pick - nv], old);
                    }
                }
            }
        }
        accepted
    }

    /// Keep particles at or above `level`, clone them back to `n`, mutate.
    /// Returns the surviving fraction and accepted proposal count.
    fn step(
        &self,
        particles: &mut Vec<Particle>,
        level: u32,
        params: &SplittingParams,
        tag: i64,
    ) -> (f64, u64, u64) {
        let n = particles.len();
        let survivors: Vec<Particle> = particles.drain(..).filter(|p| p.score >= level).collect();
        let frac = survivors.len() as f64 / n as f64;
        if survivors.is_empty() {
            return (0.0, 0, 0);
        }
        *particles = (0..n)
            .map(|i| {
                let u = self.u(CLONE_STREAM, &[tag, i as i64]);
                let j = ((u * survivors.len() as f64) as usize).min(survivors.len() - 1);
                Particle {
                    env: survivors[j].env.clone(),
                    score: survivors[j].score,
                }
            })
            .collect();
        let accepted: u64 = particles
            .par_iter_mut()
            .enumerate()
            .map(|(i, p)| self.mutate(p, level, params.moves, self.block(params), [tag, i as i64]))
            .sum();
        (frac, accepted, (n * params.moves) as u64)
    }
}

fn validate(params: &SplittingParams) -> Result<()> {
    if params.particles < 2 || params.runs < 2 || !(0.0 < params.p0 && params.p0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bad splitting parameters {params:?}"
        )));
    }
    Ok(())
}

/// Level ladder from a pilot run: at each stage the level is the score
/// exceeded by about a fraction `p0` of the particles.
pub fn pilot_levels<P: SplittingProblem>(
    master_seed: u64,
    problem: &P,
    params: &SplittingParams,
) -> Result<Vec<u32>> {
    validate(params)?;
    let sampler = Sampler::new(problem, SeedSpec::new(master_seed, 0).fork(PILOT_SALT));
    let n = params.particles;
    let mut particles: Vec<Particle> = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.fresh(i))
        .collect();
    let target = problem.target();
    let mut levels: Vec<u32> = vec![];
    loop {
        let mut scores: Vec<u32> = particles.iter().map(|p| p.score).collect();
        scores.sort_unstable_by(|a, b| b.cmp(a));
        let idx = ((params.p0 * n as f64) as usize).min(n - 1);
        let floor = levels.last().map_or(1, |l| l + 1);
        let level = scores[idx].max(floor).min(target);
        levels.push(level);
        if level == target {
            return Ok(levels);
        }
        let (frac, _, _) = sampler.step(&mut particles, level, params, levels.len() as i64);
        if frac == 0.0 {
            // nothing reached the level: fall back to unit steps up to the target
            levels.extend(level + 1..=target);
            return Ok(levels);
        }
    }
}

/// `P(score ≥ target)` by fixed-level splitting.
pub fn splitting_estimate<P: SplittingProblem>(
    master_seed: u64,
    problem: &P,
    params: &SplittingParams,
) -> Result<SplittingEstimate> {
    let levels = pilot_levels(master_seed, problem, params)?;
    let mut runs = Vec::with_capacity(params.runs);
    let (mut acc, mut tried) = (0u64, 0u64);
    for run in 0..params.runs {
        let sampler = Sampler::new(
            problem,
            SeedSpec::new(master_seed, 0)
                .fork(RUN_SALT)
                .fork(run as u64),
        );
        let mut particles: Vec<Particle> = (0..params.particles as u64)
            .into_par_iter()
            .map(|i| sampler.fresh(i))
            .collect();
        let mut estimate = 1.0;
        for (k, &level) in levels.iter().enumerate() {
            if k + 1 == levels.len() {
                estimate *= particles.iter().filter(|p| p.score >= level).count() as f64
                    / particles.len() as f64;
                break;
            }
            let (frac, a, t) = sampler.step(&mut particles, level, params, k as i64 + 1);
            acc += a;
            tried += t;
            estimate *= frac;
            if frac == 0.0 {
                break;
            }
        }
        runs.push(estimate);
    }
    let r = runs.len() as f64;
    let mean = runs.iter().sum::<f64>() / r;
    let var = runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(SplittingEstimate {
        levels,
        mean,
        se: (var / r).sqrt(),
        acceptance: if tried == 0 {
            0.0
        } else {
            acc as f64 / tried as f64
        },
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::{annulus_dual_crossing, crossing_time};

    #[test]
    fn scores_match_events() {
        let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5]).unwrap();
        let span = CrossingSpan::new(&law, 0.7, 12).unwrap();
        for rep in 0..60 {
            let env = EnvironmentField::sample(&SeedSpec::new(1, rep), span.window(), &law);
            assert_eq!(
                span.score(&env) >= span.target(),
                crossing_time(&env) <= 0.7,
                "rep {rep}"
            );
        }
        let three = ConstraintLaw::new(&[0.0, 0.0, 0.2, 0.8]).unwrap();
        let reach = AnnulusReach::new(&three, 1.0, 3, 2).unwrap();
        let mut hits = 0;
        for rep in 0..200 {
            let env = EnvironmentField::sample(&SeedSpec::new(2, rep), reach.window(), &three);
            let cfg = evolve(&env).config_at(1.0).unwrap();
            let event = annulus_dual_crossing(&cfg, DualVertex::new(0, 0), 3).unwrap();
            hits += u32::from(event);
            assert_eq!(reach.score(&env) >= reach.target(), event, "rep {rep}");
        }
        assert!(hits > 0);
    }

    #[test]
    fn splitting_agrees_with_direct_sampling() {
        let law = ConstraintLaw::new(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        let span = CrossingSpan::new(&law, 1.0, 10).unwrap();
        let direct = crate::renorm::crossing_probability(4, &law, 1.0, 10, 20_000).unwrap();
        let params = SplittingParams {
            particles: 100,
            moves: 5,
            block: 3,
            runs: 10,
            p0: 0.3,
        };
        let est = splitting_estimate(4, &span, &params).unwrap();
        let se = (est.se.powi(2) + direct.se.powi(2)).sqrt();
        assert!(
            (est.mean - direct.p_hat).abs() <= 3.0 * se,
            "{est:?} vs {direct:?}"
        );
        assert_eq!(*est.levels.last().unwrap(), span.target());
    }
}
