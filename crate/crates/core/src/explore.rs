//! Information-correlated Levy walk exploration.
//!
//! Step lengths come from a truncated power law sampled by inverse CDF.
//! Headings are chosen by rolling candidate trajectories forward over the
//! robot's own map, scoring each by the mutual information the expected range
//! measurements carry about the map, per unit heading-change cost. The
//! baseline standard Levy walk draws headings uniformly instead.
//!
//! Per-beam mutual information has two routes: [`beam_mi`] evaluates the
//! reduced single-integral form (entropy of the range marginal plus a
//! closed-form constant), while [`beam_mi_enumeration`] brute-forces the
//! defining double sum over all occupancy outcomes. They agree to quadrature
//! accuracy and cross-check each other.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::OccupancyGrid;
use crate::sensor::{forward_pdf, range_marginal, SensorSpec};
use crate::util::trapezoid;
use crate::Real;

/// Small positive floor added to the heading-change cost so straight-ahead
/// candidates keep a finite score (pi/72 rad, i.e. 2.5 degrees).
pub const PHI: f64 = std::f64::consts::PI / 72.0;

/// Truncated power-law step-length distribution `p(l) ~ l^-alpha` on
/// `[l_min, l_max]`. Exponents in `(1, 3)` give the superdiffusive regime;
/// the truncation makes the density normalizable.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LevyParams<R> {
    pub alpha: R,
    pub l_min: R,
    pub l_max: R,
}

impl<R: Real> LevyParams<R> {
    pub fn new(alpha: R, l_min: R, l_max: R) -> Result<Self> {
        if !(alpha > R::one() && alpha < R::of(3.0)) {
            return Err(Error::parameter("levy exponent must lie in (1, 3)"));
        }
        if !(l_min > R::zero() && l_min < l_max) {
            return Err(Error::parameter("need 0 < l_min < l_max"));
        }
        Ok(Self { alpha, l_min, l_max })
    }
}

/// Inverse CDF of the truncated power law at quantile `u` in `[0, 1]`.
pub fn levy_inverse_cdf<R: Real>(params: &LevyParams<R>, u: R) -> R {
    let e = R::one() - params.alpha;
    let a = params.l_min.powf(e);
    let b = params.l_max.powf(e);
    (a + u * (b - a)).powf(e.recip())
}

/// Draw a step length.
pub fn sample_levy_length<R: Real>(params: &LevyParams<R>, rng: &mut impl Rng) -> R {
    levy_inverse_cdf(params, R::of(rng.random::<f64>()))
}

/// Uniformly random heading on `[-pi, pi)`: the standard Levy walk baseline.
pub fn slw_heading<R: Real>(rng: &mut impl Rng) -> R {
    R::of(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

/// Additive constant of the reduced mutual-information form, in bits:
/// the negated differential entropy of the sensor's Gaussian noise.
pub fn mi_constant<R: Real>(sigma: R) -> R {
    let sqrt_2pi = R::of(std::f64::consts::TAU).sqrt();
    -(sqrt_2pi * sigma).log2r() - R::of(0.5 * std::f64::consts::LOG2_E)
}

fn mi_quadrature_upper<R: Real>(spec: &SensorSpec<R>) -> (R, usize) {
    let upper = spec.s_max + R::of(6.0) * spec.sigma;
    let step = spec.sigma / R::of(4.0);
    let steps = (upper / step).ceil().to_f64().unwrap_or(1.0) as usize;
    (upper, steps.max(1))
}

/// Mutual information, in bits, between one beam's range measurement and the
/// occupancy of the cells it intersects, evaluated as
/// `-∫ P(z) log2 P(z) dz + K` with `P(z)` the range marginal. Trapezoid
/// quadrature over `z` in `[0, s_max + 6 sigma]` at step `sigma / 4`.
pub fn beam_mi<R: Real>(cell_probs: &[R], cell_dists: &[R], spec: &SensorSpec<R>) -> Result<R> {
    let marginal = range_marginal(cell_probs, cell_dists, spec)?;
    let (upper, steps) = mi_quadrature_upper(spec);
    let h = trapezoid(R::zero(), upper, steps, |z| {
        let p = marginal.pdf(z, spec);
        if p > R::zero() {
            -p * p.log2r()
        } else {
            R::zero()
        }
    });
    Ok(h + mi_constant(spec.sigma))
}

/// Brute-force evaluation of the same mutual information from its defining
/// double integral: enumerate all `2^n` occupancy outcomes, group them by the
/// first occupied cell, and integrate `P(c, z) log2(P(c, z) / (P(c) P(z)))`
/// numerically. Only feasible for short beams; the independent oracle for
/// [`beam_mi`].
pub fn beam_mi_enumeration<R: Real>(
    cell_probs: &[R],
    cell_dists: &[R],
    spec: &SensorSpec<R>,
) -> Result<R> {
    let n = cell_probs.len();
    if n != cell_dists.len() {
        return Err(Error::parameter("cell_probs and cell_dists length mismatch"));
    }
    if n > 16 {
        return Err(Error::parameter("enumeration oracle limited to 16 cells"));
    }
    for &p in cell_probs {
        if p < R::zero() || p > R::one() {
            return Err(Error::InvalidProbability(p.to_f64().unwrap_or(f64::NAN)));
        }
    }
    // Outcome class weights: index k is "cell k is the first occupied one",
    // index n is "no cell occupied".
    let mut class_weight = vec![R::zero(); n + 1];
    for mask in 0u32..(1u32 << n) {
        let mut w = R::one();
        for (k, &p) in cell_probs.iter().enumerate() {
            let occ = mask & (1 << k) != 0;
            w = w * if occ { p } else { R::one() - p };
        }
        let class = (0..n).find(|k| mask & (1 << k) != 0).unwrap_or(n);
        class_weight[class] += w;
    }
    let delta_of_class =
        |k: usize| -> Option<R> { if k < n { Some(cell_dists[k]) } else { None } };

    let upper = spec.s_max + R::of(8.0) * spec.sigma;
    let step = spec.sigma / R::of(16.0);
    let steps = (upper / step).ceil().to_f64().unwrap_or(1.0) as usize;
    let mi = trapezoid(R::zero(), upper, steps.max(1), |z| {
        let pz: R = (0..=n)
            .map(|k| class_weight[k] * forward_pdf(z, delta_of_class(k), spec))
            .sum();
        if pz <= R::zero() {
            return R::zero();
        }
        (0..=n)
            .map(|k| {
                let w = class_weight[k];
                if w <= R::zero() {
                    return R::zero();
                }
                let g = forward_pdf(z, delta_of_class(k), spec);
                if g <= R::zero() {
                    return R::zero();
                }
                w * g * (g / pz).log2r()
            })
            .sum()
    });
    Ok(mi)
}

/// One scored beam inside a trajectory rollout, identified by the pose sample
/// it was cast from and its slot in the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamCandidate<R> {
    pub pose_idx: usize,
    pub beam_idx: usize,
    pub mi: R,
}

/// Greedy beam selection: keep beams with information gain above `tau_mi`,
/// at most one per (pose sample, beam slot).
pub fn select_beams<R: Real>(candidates: &[BeamCandidate<R>], tau_mi: R) -> Vec<BeamCandidate<R>> {
    let mut best: std::collections::BTreeMap<(usize, usize), BeamCandidate<R>> =
        std::collections::BTreeMap::new();
    for c in candidates {
        if c.mi > tau_mi {
            best.entry((c.pose_idx, c.beam_idx))
                .and_modify(|b| {
                    if c.mi > b.mi {
                        *b = *c;
                    }
                })
                .or_insert(*c);
        }
    }
    best.into_values().collect()
}

/// Expected information gain, in bits, of moving along `heading` for
/// `duration` seconds at constant speed, measured against the robot's own
/// map. Poses are sampled every `sample_dt` seconds starting at the current
/// position; every beam of the scan is cast at each pose, and the
/// above-threshold beams are summed (independence approximation). Cell
/// occupancies enter through [`OccupancyGrid::belief`], so unexplored cells
/// count as maximum-entropy rather than certain. A pose that leaves the grid
/// or enters a cell with stored occupancy above 0.95 stops the rollout.
pub fn trajectory_mi<R: Real>(
    map: &OccupancyGrid<R>,
    pose: (R, R),
    heading: R,
    speed: R,
    duration: R,
    spec: &SensorSpec<R>,
    tau_mi: R,
    sample_dt: R,
) -> Result<R> {
    if sample_dt <= R::zero() {
        return Err(Error::parameter("sample_dt must be positive"));
    }
    let geom = map.geometry();
    let (dx, dy) = (heading.cos(), heading.sin());
    let blocked = R::of(0.95);
    let mut candidates = Vec::new();
    let mut pose_idx = 0usize;
    let mut t = R::zero();
    loop {
        let px = pose.0 + speed * t * dx;
        let py = pose.1 + speed * t * dy;
        let Some((cx, cy)) = geom.cell_at(px, py) else { break };
        if map.prob(geom.index(cx, cy)) > blocked {
            break;
        }
        for (beam_idx, angle) in spec.beam_angles(heading).into_iter().enumerate() {
            let trace = crate::sensor::cast_beam(geom, (px, py), angle, spec)?;
            let probs: Vec<R> = trace.cells.iter().map(|&(idx, _)| map.belief(idx)).collect();
            let dists: Vec<R> = trace.cells.iter().map(|&(_, s)| s).collect();
            let mi = beam_mi(&probs, &dists, spec)?;
            candidates.push(BeamCandidate { pose_idx, beam_idx, mi });
        }
        pose_idx += 1;
        t += sample_dt;
        if t > duration {
            break;
        }
    }
    Ok(select_beams(&candidates, tau_mi).iter().map(|c| c.mi).sum())
}

/// Heading-change cost: chord length between unit velocity vectors separated
/// by `dtheta`, plus the floor `phi`.
pub fn heading_cost<R: Real>(dtheta: R, phi: R) -> R {
    R::of(2.0) * (dtheta.abs() * R::of(0.5)).sin() + phi
}

/// Index of the winning candidate among `(mi, dtheta)` pairs: maximum
/// `mi / cost(dtheta)`, ties broken toward the smallest heading change, then
/// the lowest index.
pub fn best_candidate<R: Real>(scored: &[(R, R)], phi: R) -> Option<usize> {
    let mut best: Option<(usize, R, R)> = None;
    for (j, &(mi, dtheta)) in scored.iter().enumerate() {
        let score = mi / heading_cost(dtheta, phi);
        let better = match best {
            None => true,
            Some((_, bs, bd)) => score > bs || (score == bs && dtheta.abs() < bd),
        };
        if better {
            best = Some((j, score, dtheta.abs()));
        }
    }
    best.map(|(j, _, _)| j)
}

/// Knobs of the heading search. `sample_dt = None` derives the rollout pose
/// spacing from the sensor range so consecutive footprints overlap.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeadingSearch<R> {
    pub n_candidates: usize,
    pub tau_mi: R,
    pub sample_dt: Option<R>,
    pub phi: R,
}

impl<R: Real> Default for HeadingSearch<R> {
    fn default() -> Self {
        Self {
            n_candidates: 8,
            tau_mi: R::of(0.01),
            sample_dt: None,
            phi: R::of(PHI),
        }
    }
}

/// One evaluated heading candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore<R> {
    pub heading: R,
    pub mi: R,
    pub cost: R,
}

/// The outcome of a heading search: the chosen heading and step, plus every
/// candidate for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingDecision<R> {
    pub heading: R,
    pub step_length: R,
    pub duration: R,
    pub score: R,
    pub per_candidate: Vec<CandidateScore<R>>,
}

/// Draw a Levy step length and pick the heading that maximizes trajectory
/// information per unit heading-change cost, among `n_candidates` headings
/// evenly spaced around the circle anchored at the current heading.
#[allow(clippy::too_many_arguments)]
pub fn choose_heading<R: Real>(
    map: &OccupancyGrid<R>,
    pose: (R, R),
    current_heading: R,
    speed: R,
    levy: &LevyParams<R>,
    spec: &SensorSpec<R>,
    rng: &mut impl Rng,
    search: &HeadingSearch<R>,
) -> Result<HeadingDecision<R>> {
    if search.n_candidates == 0 {
        return Err(Error::parameter("need at least one heading candidate"));
    }
    if speed <= R::zero() {
        return Err(Error::parameter("speed must be positive"));
    }
    let length = sample_levy_length(levy, rng);
    let duration = length / speed;
    let sample_dt = search
        .sample_dt
        .unwrap_or(R::of(2.0) * spec.s_max / (R::of(3.0) * speed));

    let tau = R::of(std::f64::consts::TAU);
    let pi = R::of(std::f64::consts::PI);
    let n = R::of(search.n_candidates as f64);
    let mut per_candidate = Vec::with_capacity(search.n_candidates);
    let mut scored = Vec::with_capacity(search.n_candidates);
    for j in 0..search.n_candidates {
        let offset = tau * R::of(j as f64) / n;
        // Wrap the offset into (-pi, pi] to measure the actual deviation.
        let dtheta = if offset > pi { offset - tau } else { offset };
        let heading = current_heading + dtheta;
        let mi =
            trajectory_mi(map, pose, heading, speed, duration, spec, search.tau_mi, sample_dt)?;
        per_candidate.push(CandidateScore {
            heading,
            mi,
            cost: heading_cost(dtheta, search.phi),
        });
        scored.push((mi, dtheta));
    }
    let best = best_candidate(&scored, search.phi).expect("candidate list nonempty");
    let chosen = &per_candidate[best];
    Ok(HeadingDecision {
        heading: chosen.heading,
        step_length: length,
        duration,
        score: chosen.mi / chosen.cost,
        per_candidate,
    })
}
