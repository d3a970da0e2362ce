//! Geometric-mean map sharing over a time-varying communication graph.
//!
//! Robots that come within broadcast range exchange map snapshots. Snapshots
//! queue up and are consumed one per time step, pairwise and mutually: when
//! robot `i` fuses the snapshot it received from `n`, robot `n` fuses the
//! matching snapshot from `i` in the same step, each with weight 1/2 on both
//! operands. Isolated robots keep their map (weight 1 on themselves). The
//! implied per-step weight matrix is therefore doubly stochastic, which is
//! what drives every cell to a common limit.
//!
//! One fusion step for cell `j` of robot `i` is
//!
//! ```text
//! P_j(k+1) = u_j(k) * prod_n P_j^n(k) ^ a_in(k)
//! ```
//!
//! where `u_j(k)` is the measurement factor from the robot's own scan at step
//! `k` (1 when the scan says nothing about the cell). In negative-log space
//! this is linear averaging plus an input term, so the classic average
//! consensus results apply: as long as the union of communication graphs over
//! a window stays connected and measurement factors eventually cease, every
//! robot's cell probability converges exponentially to the geometric mean of
//! the initial values times the product of per-step geometric means of the
//! applied factors. [`ConsensusLedger::theorem_limit`] evaluates that
//! prediction; [`log_dynamics_step`] exposes the log-domain dynamics for
//! cross-checking the multiplicative implementation.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::grid::OccupancyGrid;
use crate::util::linear_fit;
use crate::Real;

/// Exponents a robot applies to itself and its (optional) partner in one
/// fusion step. Valid shares are exactly `1` alone or `0.5 / 0.5` paired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionShare<R> {
    pub self_weight: R,
    pub partner_weight: R,
}

impl<R: Real> FusionShare<R> {
    pub fn alone() -> Self {
        Self { self_weight: R::one(), partner_weight: R::zero() }
    }

    pub fn pairwise() -> Self {
        Self { self_weight: R::of(0.5), partner_weight: R::of(0.5) }
    }
}

/// The pairing for one time step: `partner[i]` names the robot whose queued
/// snapshot robot `i` fuses, `None` for robots that keep their own map.
/// Pairings are mutual by construction, so the implied weight matrix is
/// doubly stochastic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionWeights {
    partner: Vec<Option<usize>>,
}

impl FusionWeights {
    pub fn new(partner: Vec<Option<usize>>) -> Result<Self> {
        for (i, &p) in partner.iter().enumerate() {
            if let Some(n) = p {
                if n == i || n >= partner.len() || partner[n] != Some(i) {
                    return Err(Error::parameter(format!(
                        "pairing is not mutual at robot {i}"
                    )));
                }
            }
        }
        Ok(Self { partner })
    }

    pub fn isolated(n_robots: usize) -> Self {
        Self { partner: vec![None; n_robots] }
    }

    pub fn n_robots(&self) -> usize {
        self.partner.len()
    }

    pub fn partner_of(&self, robot: usize) -> Option<usize> {
        self.partner[robot]
    }

    pub fn share<R: Real>(&self, robot: usize) -> FusionShare<R> {
        match self.partner[robot] {
            Some(_) => FusionShare::pairwise(),
            None => FusionShare::alone(),
        }
    }

    /// The weight matrix realized by this pairing.
    pub fn to_matrix<R: Real>(&self) -> Vec<Vec<R>> {
        let n = self.partner.len();
        let mut a = vec![vec![R::zero(); n]; n];
        let half = R::of(0.5);
        for i in 0..n {
            match self.partner[i] {
                Some(p) => {
                    a[i][i] = half;
                    a[i][p] = half;
                }
                None => a[i][i] = R::one(),
            }
        }
        a
    }
}

/// A pending fusion obligation.
#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    partner: usize,
    arrived: u64,
}

/// Assumption-2 style pairwise interaction scheduling.
///
/// Encounters enqueue reciprocal fusion obligations (robot `i` owes one
/// fusion with `n` and vice versa, stamped with the encounter step). Each
/// step, every robot whose queue head (a) arrived at an earlier step and (b)
/// points at a robot whose own head points back is paired with it; both
/// entries are consumed. Fusion reads the partner's map as it stands at the
/// fusion step (a synchronous exchange), which is what keeps the per-step
/// dynamics exactly `x(k+1) = A(k) x(k) + u(k)` in log space.
#[derive(Debug, Clone)]
pub struct PairScheduler {
    queues: Vec<VecDeque<QueueEntry>>,
    step: u64,
}

impl PairScheduler {
    pub fn new(n_robots: usize) -> Self {
        Self { queues: (0..n_robots).map(|_| VecDeque::new()).collect(), step: 0 }
    }

    pub fn n_robots(&self) -> usize {
        self.queues.len()
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn queue_len(&self, robot: usize) -> usize {
        self.queues[robot].len()
    }

    /// Record the encounters of the current step. Each pair `(i, n)` buffers
    /// an obligation in both directions. Within a step, entries are enqueued
    /// in sorted pair order, which keeps the head-matching deadlock-free.
    pub fn enqueue_encounters(&mut self, pairs: &[(usize, usize)]) -> Result<()> {
        let n = self.queues.len();
        let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            if i >= n || j >= n || i == j {
                return Err(Error::parameter(format!("bad encounter pair ({i}, {j})")));
            }
            sorted.push((i.min(j), i.max(j)));
        }
        sorted.sort_unstable();
        sorted.dedup();
        for (i, j) in sorted {
            self.queues[i].push_back(QueueEntry { partner: j, arrived: self.step });
            self.queues[j].push_back(QueueEntry { partner: i, arrived: self.step });
        }
        Ok(())
    }

    /// Close the current step: compute the mutual pairing among eligible
    /// queue heads (those buffered at an earlier step), pop the consumed
    /// entries, and advance the step counter.
    pub fn advance(&mut self) -> FusionWeights {
        let n = self.queues.len();
        let heads: Vec<Option<usize>> = self
            .queues
            .iter()
            .map(|q| q.front().filter(|e| e.arrived < self.step).map(|e| e.partner))
            .collect();
        let mut partner: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            if partner[i].is_some() {
                continue;
            }
            if let Some(h) = heads[i] {
                if h != i && partner[h].is_none() && heads[h] == Some(i) {
                    partner[i] = Some(h);
                    partner[h] = Some(i);
                }
            }
        }
        for (i, p) in partner.iter().enumerate() {
            if p.is_some() {
                let entry = self.queues[i].pop_front().expect("matched head exists");
                debug_assert_eq!(Some(entry.partner), *p);
            }
        }
        self.step += 1;
        let weights = FusionWeights { partner };
        debug_assert!(doubly_stochastic_check(&weights.to_matrix::<f64>()));
        weights
    }
}

/// Apply one synchronous fusion round to the whole swarm: all paired robots
/// read each other's pre-round maps, then every robot fuses with its own
/// measurement factors. `u[robot]` is the dense factor vector.
pub fn fusion_round<R: Real>(
    grids: &mut [OccupancyGrid<R>],
    weights: &FusionWeights,
    u: &[Vec<R>],
) -> Result<()> {
    let n = grids.len();
    if weights.n_robots() != n || u.len() != n {
        return Err(Error::parameter("fusion round shape mismatch"));
    }
    let pre: Vec<Option<OccupancyGrid<R>>> =
        (0..n).map(|r| weights.partner_of(r).map(|p| grids[p].clone())).collect();
    for r in 0..n {
        fuse_step(&mut grids[r], pre[r].as_ref(), &u[r], weights.share(r))?;
    }
    Ok(())
}

/// Turn per-robot neighbor sets over time into the per-step fusion pairings
/// the buffered protocol realizes. The neighbor relation must be symmetric at
/// every step. Steps beyond the input drain the remaining queues.
pub fn schedule_interactions(
    neighbor_sets: &[Vec<BTreeSet<usize>>],
    drain_steps: usize,
) -> Result<Vec<FusionWeights>> {
    let n = neighbor_sets.first().map_or(0, |s| s.len());
    let mut scheduler = PairScheduler::new(n);
    let mut out = Vec::new();
    for step_sets in neighbor_sets {
        if step_sets.len() != n {
            return Err(Error::parameter("neighbor set count changed mid-schedule"));
        }
        let mut pairs = Vec::new();
        for (i, set) in step_sets.iter().enumerate() {
            for &j in set {
                if j >= n || !step_sets.get(j).is_some_and(|s| s.contains(&i)) {
                    return Err(Error::AsymmetricNeighbors(i, j));
                }
                if i < j {
                    pairs.push((i, j));
                }
            }
        }
        scheduler.enqueue_encounters(&pairs)?;
        out.push(scheduler.advance());
    }
    for _ in 0..drain_steps {
        out.push(scheduler.advance());
    }
    Ok(out)
}

/// One protocol step for one robot's map: multiply in the measurement
/// factors and take the weighted geometric mean with the partner snapshot.
/// Results are clamped to `[p_min, 1]`; cells touched by a factor or explored
/// in the snapshot become explored.
pub fn fuse_step<R: Real>(
    grid: &mut OccupancyGrid<R>,
    partner: Option<&OccupancyGrid<R>>,
    u: &[R],
    share: FusionShare<R>,
) -> Result<()> {
    let n = grid.geometry().n_cells();
    if u.len() != n {
        return Err(Error::parameter("measurement factor vector length mismatch"));
    }
    for &f in u {
        if f <= R::zero() {
            return Err(Error::NonPositiveProbability(f.to_f64().unwrap_or(f64::NAN)));
        }
        if f > R::one() {
            return Err(Error::InvalidProbability(f.to_f64().unwrap_or(f64::NAN)));
        }
    }
    match partner {
        Some(p) => {
            if !p.geometry().same_shape(grid.geometry()) {
                return Err(Error::DimensionMismatch(
                    grid.geometry().width,
                    grid.geometry().height,
                    p.geometry().width,
                    p.geometry().height,
                ));
            }
            let half = R::of(0.5);
            if share.self_weight != half || share.partner_weight != half {
                return Err(Error::parameter("paired fusion uses weights 0.5/0.5"));
            }
            for j in 0..n {
                let fused = (grid.prob(j) * p.prob(j)).sqrt() * u[j];
                grid.set_prob_clamped(j, fused);
                if u[j] < R::one() || p.explored(j) {
                    grid.mark_explored(j);
                }
            }
        }
        None => {
            if share.self_weight != R::one() || share.partner_weight != R::zero() {
                return Err(Error::parameter("solo fusion uses weight 1 on self"));
            }
            for j in 0..n {
                if u[j] < R::one() {
                    let scaled = grid.prob(j) * u[j];
                    grid.set_prob_clamped(j, scaled);
                    grid.mark_explored(j);
                }
            }
        }
    }
    Ok(())
}

/// True iff every row and column of a square nonnegative matrix sums to 1
/// within a small tolerance.
pub fn doubly_stochastic_check<R: Real>(a: &[Vec<R>]) -> bool {
    let n = a.len();
    let tol = R::of(1e-12).max(R::epsilon() * R::of(16.0));
    let mut col_sums = vec![R::zero(); n];
    for row in a {
        if row.len() != n {
            return false;
        }
        let mut row_sum = R::zero();
        for (j, &v) in row.iter().enumerate() {
            if v < R::zero() {
                return false;
            }
            row_sum += v;
            col_sums[j] += v;
        }
        if (row_sum - R::one()).abs() > tol {
            return false;
        }
    }
    col_sums.iter().all(|&c| (c - R::one()).abs() <= tol)
}

/// One step of the negative-log-domain dynamics `x(k+1) = A x(k) + lu(k)` for
/// a single cell, where `x_i = -log2 P_i`. Exponentiating reproduces
/// [`fuse_step`] up to floating round-off. Rejects weight matrices that are
/// not doubly stochastic.
pub fn log_dynamics_step<R: Real>(state: &[R], a: &[Vec<R>], log_u: &[R]) -> Result<Vec<R>> {
    let n = state.len();
    if a.len() != n || log_u.len() != n {
        return Err(Error::parameter("log dynamics dimension mismatch"));
    }
    if !doubly_stochastic_check(a) {
        return Err(Error::NotDoublyStochastic);
    }
    Ok((0..n)
        .map(|i| {
            let mixed: R = (0..n).map(|j| a[i][j] * state[j]).sum();
            mixed + log_u[i]
        })
        .collect())
}

/// Audit trail of everything that determines a cell's consensus limit: the
/// initial probabilities across robots and every measurement-factor vector
/// that was not all ones.
#[derive(Debug, Clone)]
pub struct ConsensusLedger<R> {
    n_robots: usize,
    n_cells: usize,
    /// `initial[cell][robot]`
    initial: Vec<Vec<R>>,
    /// `(step, factors[cell][robot])`, recorded only when some factor != 1
    factors: Vec<(u64, Vec<Vec<R>>)>,
}

impl<R: Real> ConsensusLedger<R> {
    /// Start a ledger from the robots' initial per-cell probabilities,
    /// `initial[robot][cell]`.
    pub fn new(initial_per_robot: &[Vec<R>]) -> Result<Self> {
        let n_robots = initial_per_robot.len();
        if n_robots == 0 {
            return Err(Error::NotEnoughGrids { required: 1, got: 0 });
        }
        let n_cells = initial_per_robot[0].len();
        if initial_per_robot.iter().any(|v| v.len() != n_cells) {
            return Err(Error::parameter("initial probability vectors differ in length"));
        }
        let mut initial = vec![vec![R::zero(); n_robots]; n_cells];
        for (r, vals) in initial_per_robot.iter().enumerate() {
            for (c, &p) in vals.iter().enumerate() {
                if p <= R::zero() {
                    return Err(Error::NonPositiveProbability(p.to_f64().unwrap_or(f64::NAN)));
                }
                initial[c][r] = p;
            }
        }
        Ok(Self { n_robots, n_cells, initial, factors: Vec::new() })
    }

    /// Record the factor vectors applied at `step`, `u[robot][cell]`. Steps
    /// where every factor is 1 leave no trace.
    pub fn record_step(&mut self, step: u64, u: &[&[R]]) -> Result<()> {
        if u.len() != self.n_robots || u.iter().any(|v| v.len() != self.n_cells) {
            return Err(Error::parameter("factor matrix shape mismatch"));
        }
        let one = R::one();
        if u.iter().all(|v| v.iter().all(|&f| f == one)) {
            return Ok(());
        }
        let mut per_cell = vec![vec![R::zero(); self.n_robots]; self.n_cells];
        for (r, vals) in u.iter().enumerate() {
            for (c, &f) in vals.iter().enumerate() {
                per_cell[c][r] = f;
            }
        }
        self.factors.push((step, per_cell));
        Ok(())
    }

    pub fn n_factor_steps(&self) -> usize {
        self.factors.len()
    }

    pub fn last_factor_step(&self) -> Option<u64> {
        self.factors.iter().map(|&(s, _)| s).max()
    }

    /// The limit every robot's probability for `cell` converges to: the
    /// geometric mean of the initial values times the product over recorded
    /// steps of the geometric mean of that step's factors. Cells no factor
    /// ever touched keep the geometric mean of their initial values.
    pub fn theorem_limit(&self, cell: usize) -> R {
        let mut log_acc = geometric_mean_log2(&self.initial[cell]);
        for (_, per_cell) in &self.factors {
            log_acc += geometric_mean_log2(&per_cell[cell]);
        }
        log_acc.exp2()
    }

    /// Limits for all cells, with a flag marking cells whose unclamped limit
    /// lies below `p_min` (those will sit at the clamp, off the prediction,
    /// by design).
    pub fn limits_with_clamp_flags(&self, p_min: R) -> Vec<(R, bool)> {
        (0..self.n_cells)
            .map(|c| {
                let lim = self.theorem_limit(c);
                (lim, lim < p_min)
            })
            .collect()
    }
}

fn geometric_mean_log2<R: Real>(values: &[R]) -> R {
    let n = R::of(values.len() as f64);
    values.iter().map(|&v| v.log2r()).sum::<R>() / n
}

/// Exponential-rate fit of an error history: least-squares slope of
/// `ln(error)` against the step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Slope per step; negative certifies exponential decay.
    pub slope: f64,
    pub r_squared: f64,
    /// Points actually used by the fit.
    pub points: usize,
}

/// Fit the exponential convergence rate of an error tail. Points at or below
/// the floating-noise floor are excluded (the fit stops at the first one); a
/// history that is entirely noise-floor reports `slope = -inf`, i.e. already
/// converged.
pub fn convergence_rate(errors: &[f64]) -> RateFit {
    const FLOOR: f64 = 1e-14;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &e) in errors.iter().enumerate() {
        if e <= FLOOR {
            break;
        }
        xs.push(k as f64);
        ys.push(e.ln());
    }
    match linear_fit(&xs, &ys) {
        Some((slope, _, r2)) => RateFit { slope, r_squared: r2, points: xs.len() },
        None => RateFit { slope: f64::NEG_INFINITY, r_squared: 1.0, points: xs.len() },
    }
}

/// Encounter schedule for scripted protocol runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DemoSchedule {
    /// Step `k` brings robots `k mod n` and `(k+1) mod n` into contact.
    Ring,
    /// Explicit encounter pairs per step; steps beyond the list are empty.
    Explicit(Vec<Vec<(usize, usize)>>),
}

impl DemoSchedule {
    pub fn pairs_at(&self, step: u64, n_robots: usize) -> Vec<(usize, usize)> {
        match self {
            DemoSchedule::Ring => {
                if n_robots < 2 {
                    return Vec::new();
                }
                let i = (step as usize) % n_robots;
                vec![(i, (i + 1) % n_robots)]
            }
            DemoSchedule::Explicit(steps) => {
                steps.get(step as usize).cloned().unwrap_or_default()
            }
        }
    }

    fn all_pairs(&self, steps: u64, n_robots: usize) -> Vec<(usize, usize)> {
        (0..steps).flat_map(|k| self.pairs_at(k, n_robots)).collect()
    }
}

/// Deterministic measurement-factor script for protocol demonstrations:
/// before `cease_step`, robot `r` applies a factor in `[0.75, 0.93]` to cell
/// `c` at step `k` whenever `(k + 3r + 5c) % 7 == 0`; afterwards all factors
/// are 1.
pub fn scripted_factor(robot: usize, cell: usize, step: u64, cease_step: u64) -> f64 {
    if step >= cease_step {
        return 1.0;
    }
    if (step as usize + 3 * robot + 5 * cell) % 7 == 0 {
        0.75 + 0.02 * ((robot + cell + step as usize) % 10) as f64
    } else {
        1.0
    }
}

/// Result of a scripted protocol run.
#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub n_robots: usize,
    pub n_cells: usize,
    /// Predicted consensus limit per cell.
    pub limits: Vec<f64>,
    /// `trajectory[step][robot][cell]`, including the initial state at
    /// index 0.
    pub trajectory: Vec<Vec<Vec<f64>>>,
    /// Per step (aligned with `trajectory`), the maximum absolute deviation
    /// from the predicted limits over robots and cells.
    pub max_error: Vec<f64>,
    /// Whether the schedule's union graph connects the swarm.
    pub union_connected: bool,
    pub final_max_error: f64,
    /// Exponential fit of the error tail after the factors cease.
    pub tail_fit: RateFit,
}

/// Run the full protocol on scripted encounters and measurement factors, all
/// maps starting at the all-ones prior, and compare every state against the
/// predicted limits. Pure and deterministic.
pub fn run_scripted_consensus(
    n_robots: usize,
    n_cells: usize,
    steps: u64,
    schedule: &DemoSchedule,
    cease_step: u64,
) -> Result<DemoOutcome> {
    if n_robots == 0 || n_cells == 0 {
        return Err(Error::parameter("need at least one robot and one cell"));
    }
    let mut grids: Vec<OccupancyGrid<f64>> = (0..n_robots)
        .map(|_| OccupancyGrid::new(n_cells, 1, 1.0, (0.0, 0.0)))
        .collect::<Result<_>>()?;
    let mut ledger = ConsensusLedger::new(&vec![vec![1.0; n_cells]; n_robots])?;

    // The limits are fully determined by the script, so they can be computed
    // up front.
    for k in 0..steps {
        let u: Vec<Vec<f64>> = (0..n_robots)
            .map(|r| (0..n_cells).map(|c| scripted_factor(r, c, k, cease_step)).collect())
            .collect();
        let refs: Vec<&[f64]> = u.iter().map(|v| v.as_slice()).collect();
        ledger.record_step(k, &refs)?;
    }
    let limits: Vec<f64> = (0..n_cells).map(|c| ledger.theorem_limit(c)).collect();

    let snapshot = |grids: &[OccupancyGrid<f64>]| -> Vec<Vec<f64>> {
        grids.iter().map(|g| g.probs().to_vec()).collect()
    };
    let max_err = |grids: &[OccupancyGrid<f64>]| -> f64 {
        grids
            .iter()
            .flat_map(|g| g.probs().iter().enumerate().map(|(c, &p)| (p - limits[c]).abs()))
            .fold(0.0, f64::max)
    };

    let mut scheduler = PairScheduler::new(n_robots);
    let mut trajectory = vec![snapshot(&grids)];
    let mut max_error = vec![max_err(&grids)];
    for k in 0..steps {
        scheduler.enqueue_encounters(&schedule.pairs_at(k, n_robots))?;
        let weights = scheduler.advance();
        let u: Vec<Vec<f64>> = (0..n_robots)
            .map(|r| (0..n_cells).map(|c| scripted_factor(r, c, k, cease_step)).collect())
            .collect();
        fusion_round(&mut grids, &weights, &u)?;
        trajectory.push(snapshot(&grids));
        max_error.push(max_err(&grids));
    }

    let connected = union_connected(n_robots, schedule.all_pairs(steps, n_robots));
    let tail_start = (cease_step as usize + 1).min(max_error.len().saturating_sub(1));
    let tail_fit = convergence_rate(&max_error[tail_start..]);
    Ok(DemoOutcome {
        n_robots,
        n_cells,
        limits,
        final_max_error: *max_error.last().expect("at least the initial record"),
        trajectory,
        max_error,
        union_connected: connected,
        tail_fit,
    })
}

/// Whether the union of encounter pairs connects all `n` robots.
pub fn union_connected(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return false;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j) in pairs {
        if i < n && j < n {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri] = rj;
        }
    }
    let root = find(&mut parent, 0);
    (1..n).all(|i| find(&mut parent, i) == root)
}
