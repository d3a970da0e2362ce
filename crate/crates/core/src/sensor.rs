//! Beam geometry and the range sensor models.
//!
//! A laser scan is a fan of beams evenly spaced over the field of view and
//! centered on the robot heading. Casting a beam walks the grid with an
//! incremental (Amanatides-Woo) traversal, yielding the intersected cells in
//! order of increasing distance. On top of the traversal sit three models:
//!
//! * the Gaussian forward model `P(z | delta)` of a range reading given the
//!   true distance to the reflecting surface,
//! * the range marginal `P(z)` along a beam of uncertain cells, a Gaussian
//!   mixture whose weights are the first-occupied-cell probabilities,
//! * the heuristic inverse model `l` that turns a reading into per-cell
//!   occupancy factors, and the update rule `u` that combines a whole scan.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::Real;

/// Laser range sensor parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensorSpec<R> {
    /// Number of beams per scan.
    pub n_beams: usize,
    /// Field of view in radians, centered on the robot heading.
    pub fov: R,
    /// Minimum measurable distance.
    pub s_min: R,
    /// Maximum measurable distance.
    pub s_max: R,
    /// Radial noise standard deviation.
    pub sigma: R,
}

impl<R: Real> SensorSpec<R> {
    pub fn new(n_beams: usize, fov: R, s_min: R, s_max: R, sigma: R) -> Result<Self> {
        if n_beams == 0 {
            return Err(Error::parameter("sensor needs at least one beam"));
        }
        if !(s_min >= R::zero() && s_min < s_max) {
            return Err(Error::parameter("need 0 <= s_min < s_max"));
        }
        if sigma <= R::zero() {
            return Err(Error::parameter("sigma must be positive"));
        }
        if fov < R::zero() {
            return Err(Error::parameter("fov must be nonnegative"));
        }
        Ok(Self { n_beams, fov, s_min, s_max, sigma })
    }

    /// Beam directions for a scan taken at `heading`.
    pub fn beam_angles(&self, heading: R) -> Vec<R> {
        if self.n_beams == 1 {
            return vec![heading];
        }
        let n = R::of((self.n_beams - 1) as f64);
        (0..self.n_beams)
            .map(|j| heading + self.fov * (R::of(j as f64) / n - R::of(0.5)))
            .collect()
    }
}

/// Cells intersected by one beam, ordered by distance.
///
/// `cells` holds `(cell index, s)` where `s` is the distance from the sensor
/// to the cell center measured along the beam; traversal stops at
/// `s_max + sigma`. `hit_distance` is the true distance to the boundary of
/// the first occupied cell when cast against a ground-truth world, `None` if
/// nothing is hit within `s_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamTrace<R> {
    pub cells: Vec<(usize, R)>,
    pub hit_distance: Option<R>,
}

/// Cast a beam through grid geometry alone (no obstacles, `hit_distance` is
/// always `None`).
pub fn cast_beam<R: Real>(
    geom: &GridGeometry<R>,
    pos: (R, R),
    angle: R,
    spec: &SensorSpec<R>,
) -> Result<BeamTrace<R>> {
    cast_beam_against(geom, pos, angle, spec, |_| false)
}

/// Cast a beam against an occupancy predicate over cell indices.
///
/// Visits cells in strictly increasing distance order. The first occupied
/// cell whose entry point lies within `s_max` sets `hit_distance`; the cell
/// list is unaffected by hits and always extends to `s_max + sigma` (cells
/// beyond a measured return are cut later by the update rule).
pub fn cast_beam_against<R: Real>(
    geom: &GridGeometry<R>,
    pos: (R, R),
    angle: R,
    spec: &SensorSpec<R>,
    occupied: impl Fn(usize) -> bool,
) -> Result<BeamTrace<R>> {
    let (x, y) = pos;
    let Some((cx0, cy0)) = geom.cell_at(x, y) else {
        return Err(Error::PoseOutOfBounds {
            x: x.to_f64().unwrap_or(f64::NAN),
            y: y.to_f64().unwrap_or(f64::NAN),
        });
    };
    let cutoff = spec.s_max + spec.sigma;
    let res = geom.resolution;
    let (dx, dy) = (angle.cos(), angle.sin());

    let (mut cx, mut cy) = (cx0 as i64, cy0 as i64);
    let step_x: i64 = if dx > R::zero() { 1 } else { -1 };
    let step_y: i64 = if dy > R::zero() { 1 } else { -1 };
    // Distance along the ray to the next boundary crossing per axis.
    let mut t_max_x = if dx > R::zero() {
        (geom.origin.0 + res * R::of((cx + 1) as f64) - x) / dx
    } else if dx < R::zero() {
        (x - (geom.origin.0 + res * R::of(cx as f64))) / -dx
    } else {
        R::infinity()
    };
    let mut t_max_y = if dy > R::zero() {
        (geom.origin.1 + res * R::of((cy + 1) as f64) - y) / dy
    } else if dy < R::zero() {
        (y - (geom.origin.1 + res * R::of(cy as f64))) / -dy
    } else {
        R::infinity()
    };
    let t_delta_x = if dx == R::zero() { R::infinity() } else { res / dx.abs() };
    let t_delta_y = if dy == R::zero() { R::infinity() } else { res / dy.abs() };

    let mut cells = Vec::new();
    let mut hit = None;
    let mut entry_t = R::zero();
    loop {
        if cx < 0 || cy < 0 || cx >= geom.width as i64 || cy >= geom.height as i64 {
            break;
        }
        let idx = geom.index(cx as usize, cy as usize);
        let (ccx, ccy) = geom.cell_center(cx as usize, cy as usize);
        // Distance to the cell center along the beam direction.
        let s = (ccx - x) * dx + (ccy - y) * dy;
        if s > R::zero() && s <= cutoff {
            cells.push((idx, s));
        }
        if hit.is_none() && entry_t <= spec.s_max && occupied(idx) {
            hit = Some(entry_t);
        }
        if entry_t > spec.s_max && s > cutoff {
            break;
        }
        if t_max_x < t_max_y {
            entry_t = t_max_x;
            t_max_x += t_delta_x;
            cx += step_x;
        } else {
            entry_t = t_max_y;
            t_max_y += t_delta_y;
            cy += step_y;
        }
    }
    Ok(BeamTrace { cells, hit_distance: hit })
}

/// Gaussian density with mean `mu` and standard deviation `sigma`.
pub fn gaussian_pdf<R: Real>(z: R, mu: R, sigma: R) -> R {
    let two_pi = R::of(std::f64::consts::TAU);
    let t = (z - mu) / sigma;
    (-t * t * R::of(0.5)).exp() / (sigma * two_pi.sqrt())
}

/// Forward measurement model: density of a reading `z` given the true
/// distance `delta` to the reflecting surface. Readings pile up at 0 for
/// surfaces inside the dead zone and at `s_max` when nothing reflects within
/// range (`delta >= s_max` or `None`).
pub fn forward_pdf<R: Real>(z: R, delta: Option<R>, spec: &SensorSpec<R>) -> R {
    gaussian_pdf(z, forward_mean(delta, spec), spec.sigma)
}

fn forward_mean<R: Real>(delta: Option<R>, spec: &SensorSpec<R>) -> R {
    match delta {
        Some(d) if d <= spec.s_min => R::zero(),
        Some(d) if d >= spec.s_max => spec.s_max,
        Some(d) => d,
        None => spec.s_max,
    }
}

/// The range marginal `P(z)` along a beam: a mixture over which intersected
/// cell is the first occupied one. Component `p >= 1` carries weight
/// `prob_p * prod_{q<p} (1 - prob_q)` and reflects at the p-th cell; the
/// trailing component is the no-reflection event with the remaining weight.
#[derive(Debug, Clone)]
pub struct RangeMarginal<R> {
    components: Vec<(R, Option<R>)>,
}

pub fn range_marginal<R: Real>(
    cell_probs: &[R],
    cell_dists: &[R],
    _spec: &SensorSpec<R>,
) -> Result<RangeMarginal<R>> {
    if cell_probs.len() != cell_dists.len() {
        return Err(Error::parameter("cell_probs and cell_dists length mismatch"));
    }
    let mut components = Vec::with_capacity(cell_probs.len() + 1);
    let mut survive = R::one();
    for (&p, &d) in cell_probs.iter().zip(cell_dists) {
        if p < R::zero() || p > R::one() {
            return Err(Error::InvalidProbability(p.to_f64().unwrap_or(f64::NAN)));
        }
        components.push((p * survive, Some(d)));
        survive *= R::one() - p;
    }
    components.push((survive, None));
    Ok(RangeMarginal { components })
}

impl<R: Real> RangeMarginal<R> {
    /// Mixture components as `(weight, reflecting distance)`; the final
    /// entry is the no-reflection event.
    pub fn components(&self) -> &[(R, Option<R>)] {
        &self.components
    }

    pub fn pdf(&self, z: R, spec: &SensorSpec<R>) -> R {
        self.components
            .iter()
            .map(|&(w, delta)| w * forward_pdf(z, delta, spec))
            .fold(R::zero(), |a, b| a + b)
    }
}

/// Parameters of the heuristic inverse model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InverseModelParams<R> {
    pub p_f: R,
    pub p_a: R,
    pub p_hit: R,
}

impl<R: Real> InverseModelParams<R> {
    pub fn new(p_f: R, p_a: R, p_hit: R) -> Result<Self> {
        if !(R::zero() < p_f && p_f < p_a && p_a < p_hit && p_hit < R::one()) {
            return Err(Error::parameter("need 0 < p_f < p_a < p_hit < 1"));
        }
        Ok(Self { p_f, p_a, p_hit })
    }
}

/// Per-beam inverse model: occupancy factor for a cell at distance `s` along
/// a beam that returned `z`. `None` means the measurement carries no
/// information about the cell (it lies beyond the return).
///
/// A reading below `s_max - sigma` is treated as reflected: occupancy ramps
/// linearly from `p_f` at the sensor up to the return, cells within `sigma`
/// of the return get `p_hit`. Otherwise the beam is treated as unreflected:
/// the same ramp, with cells near `s_max` getting the ambiguous `p_a`.
pub fn inverse_l<R: Real>(
    s: R,
    z: R,
    spec: &SensorSpec<R>,
    params: &InverseModelParams<R>,
) -> Option<R> {
    let sig = spec.sigma;
    let ramp = |s: R| (params.p_a - params.p_f) / spec.s_max * s + params.p_f;
    if z <= spec.s_max - sig {
        if s > z + sig {
            None
        } else if s >= z - sig {
            Some(params.p_hit)
        } else {
            Some(ramp(s))
        }
    } else if s > spec.s_max + sig {
        None
    } else if s >= spec.s_max - sig {
        Some(params.p_a)
    } else {
        Some(ramp(s))
    }
}

/// Update rule `u` for one cell: the maximum inverse-model factor over all
/// measurements in the scan whose beams pass through the cell within
/// `min(z + sigma, s_max + sigma)`. Returns 1 when no measurement says
/// anything about the cell.
pub fn update_rule_u<R: Real>(
    cell: usize,
    pose: (R, R, R),
    scan: &[(R, R)],
    geom: &GridGeometry<R>,
    spec: &SensorSpec<R>,
    params: &InverseModelParams<R>,
) -> Result<R> {
    let mut best: Option<R> = None;
    for &(angle, z) in scan {
        let trace = cast_beam(geom, (pose.0, pose.1), angle, spec)?;
        let informative = z + spec.sigma;
        for &(idx, s) in &trace.cells {
            if idx != cell {
                continue;
            }
            if s > informative {
                break;
            }
            if let Some(l) = inverse_l(s, z, spec, params) {
                best = Some(best.map_or(l, |b: R| b.max(l)));
            }
        }
    }
    Ok(best.unwrap_or_else(R::one))
}

/// All update factors produced by one scan, max-combined per touched cell and
/// sorted by cell index. Equivalent to calling [`update_rule_u`] on every
/// touched cell, but casting each beam once.
pub fn scan_update_factors<R: Real>(
    pose: (R, R, R),
    scan: &[(R, R)],
    geom: &GridGeometry<R>,
    spec: &SensorSpec<R>,
    params: &InverseModelParams<R>,
) -> Result<Vec<(usize, R)>> {
    let mut factors: std::collections::HashMap<usize, R> = std::collections::HashMap::new();
    for &(angle, z) in scan {
        let trace = cast_beam(geom, (pose.0, pose.1), angle, spec)?;
        let informative = z + spec.sigma;
        for &(idx, s) in &trace.cells {
            if s > informative {
                break;
            }
            if let Some(l) = inverse_l(s, z, spec, params) {
                factors
                    .entry(idx)
                    .and_modify(|b| *b = (*b).max(l))
                    .or_insert(l);
            }
        }
    }
    let mut out: Vec<(usize, R)> = factors.into_iter().collect();
    out.sort_unstable_by_key(|&(idx, _)| idx);
    Ok(out)
}

/// Draw a noisy reading for a beam whose true reflecting distance is `delta`,
/// clamped to `[0, s_max + 3 sigma]`.
pub fn simulate_measurement<R: Real>(
    delta: Option<R>,
    spec: &SensorSpec<R>,
    rng: &mut impl Rng,
) -> R {
    let mu = forward_mean(delta, spec);
    let noise: f64 = StandardNormal.sample(rng);
    let z = mu + spec.sigma * R::of(noise);
    z.max(R::zero()).min(spec.s_max + R::of(3.0) * spec.sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn spec(s_max: f64, sigma: f64) -> SensorSpec<f64> {
        SensorSpec::new(1, 0.0, 0.0, s_max, sigma).unwrap()
    }

    fn corridor() -> GridGeometry<f64> {
        GridGeometry::new(10, 1, 1.0, (0.0, 0.0)).unwrap()
    }

    #[test]
    fn corridor_trace_hits_cell_centers() {
        let sp = spec(5.0, 0.05);
        let trace = cast_beam(&corridor(), (0.0, 0.5), 0.0, &sp).unwrap();
        let s: Vec<f64> = trace.cells.iter().map(|&(_, s)| s).collect();
        assert_eq!(s.len(), 5);
        for (k, &v) in s.iter().enumerate() {
            assert!((v - (k as f64 + 0.5)).abs() < 1e-12);
        }
        assert_eq!(trace.hit_distance, None);
    }

    #[test]
    fn wall_hit_at_boundary() {
        let sp = spec(5.0, 0.05);
        let trace =
            cast_beam_against(&corridor(), (0.0, 0.5), 0.0, &sp, |idx| idx == 1).unwrap();
        assert!((trace.hit_distance.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_range_truncates() {
        let sp = spec(0.4, 0.05);
        let trace =
            cast_beam_against(&corridor(), (0.0, 0.5), 0.0, &sp, |idx| idx == 1).unwrap();
        // First cell center at 0.5 > s_max + sigma = 0.45; wall at 1 m > s_max.
        assert!(trace.cells.len() <= 1);
        assert_eq!(trace.hit_distance, None);
    }

    #[test]
    fn pose_outside_grid_rejected() {
        let sp = spec(5.0, 0.05);
        assert!(cast_beam(&corridor(), (-0.5, 0.5), 0.0, &sp).is_err());
        assert!(cast_beam(&corridor(), (3.0, 1.5), 0.0, &sp).is_err());
    }

    #[test]
    fn forward_pdf_peak_values() {
        let sp = spec(2.0, 0.05);
        let peak = 1.0 / (0.05 * (std::f64::consts::TAU).sqrt());
        assert!((peak - 7.978845608028654).abs() < 1e-12);
        assert!((forward_pdf(1.0, Some(1.0), &sp) - peak).abs() < 1e-9);
        assert!((forward_pdf(2.0, None, &sp) - peak).abs() < 1e-9);
        // Near-range branch: anything inside the dead zone piles readings at 0.
        let sp_near = SensorSpec::new(1, 0.0, 0.2, 2.0, 0.05).unwrap();
        assert!((forward_pdf(0.0, Some(0.1), &sp_near) - peak).abs() < 1e-9);
    }

    #[test]
    fn forward_pdf_normalizes() {
        let sp = spec(2.0, 0.05);
        for delta in [Some(1.0), Some(0.0), Some(5.0), None] {
            let mu = forward_mean(delta, &sp);
            let integral = crate::util::trapezoid(mu - 8.0 * sp.sigma, mu + 8.0 * sp.sigma, 4000, |z| {
                forward_pdf(z, delta, &sp)
            });
            assert!((integral - 1.0).abs() < 1e-6, "delta {delta:?}: {integral}");
        }
    }

    #[test]
    fn marginal_examples() {
        let sp = spec(2.0, 0.05);
        let m = range_marginal(&[1.0], &[2.0], &sp).unwrap();
        for z in [1.8, 2.0, 2.2] {
            assert!((m.pdf(z, &sp) - forward_pdf(z, Some(2.0), &sp)).abs() < 1e-12);
        }

        let m0 = range_marginal(&[0.0], &[1.0], &sp).unwrap();
        for z in [1.8, 2.0, 2.2] {
            assert!((m0.pdf(z, &sp) - forward_pdf(z, None, &sp)).abs() < 1e-12);
        }

        let m2 = range_marginal(&[0.5, 0.5], &[1.0, 2.0], &sp).unwrap();
        let comps = m2.components();
        assert_eq!(comps.len(), 3);
        assert!((comps[0].0 - 0.5).abs() < 1e-15 && comps[0].1 == Some(1.0));
        assert!((comps[1].0 - 0.25).abs() < 1e-15 && comps[1].1 == Some(2.0));
        assert!((comps[2].0 - 0.25).abs() < 1e-15 && comps[2].1.is_none());

        assert!(range_marginal(&[1.2], &[1.0], &sp).is_err());
        assert!(range_marginal(&[0.5], &[1.0, 2.0], &sp).is_err());
    }

    #[test]
    fn marginal_integrates_to_one() {
        let sp = spec(2.0, 0.05);
        let m = range_marginal(&[0.3, 0.2, 0.4], &[0.8, 1.2, 1.7], &sp).unwrap();
        let integral =
            crate::util::trapezoid(0.0, sp.s_max + 6.0 * sp.sigma, 4000, |z| m.pdf(z, &sp));
        assert!((integral - 1.0).abs() < 1e-3);
    }

    #[test]
    fn inverse_model_paper_values() {
        let sp = spec(2.0, 0.05);
        let pm = InverseModelParams::new(0.1, 0.5, 0.9).unwrap();
        // Reflected reading
        let z = 1.0;
        assert_eq!(inverse_l(0.0, z, &sp, &pm), Some(0.1));
        assert_eq!(inverse_l(z, z, &sp, &pm), Some(0.9));
        assert_eq!(inverse_l(z - sp.sigma, z, &sp, &pm), Some(0.9));
        assert_eq!(inverse_l(z + sp.sigma, z, &sp, &pm), Some(0.9));
        assert_eq!(inverse_l(z + sp.sigma + 1e-9, z, &sp, &pm), None);
        // Unreflected reading
        let zu = 2.0;
        assert_eq!(inverse_l(sp.s_max, zu, &sp, &pm), Some(0.5));
        assert_eq!(inverse_l(sp.s_max + sp.sigma + 1e-9, zu, &sp, &pm), None);
    }

    #[test]
    fn inverse_model_monotone_and_capped() {
        let sp = spec(2.0, 0.05);
        let pm = InverseModelParams::new(0.1, 0.5, 0.9).unwrap();
        let mut last = 0.0;
        for k in 0..100 {
            let s = 0.9 * k as f64 / 100.0;
            let l = inverse_l(s, 1.0, &sp, &pm).unwrap();
            assert!(l >= last && l <= pm.p_hit);
            last = l;
        }
    }

    #[test]
    fn update_rule_examples() {
        let geom = corridor();
        let sp = spec(5.0, 0.05);
        let pm = InverseModelParams::new(0.1, 0.5, 0.9).unwrap();
        let pose = (0.0, 0.5, 0.0);

        // Cell 2 (center 2.5) sits behind a wall reported at z = 1.5.
        let u = update_rule_u(2, pose, &[(0.0, 1.5)], &geom, &sp, &pm).unwrap();
        assert_eq!(u, 1.0);

        // Cell straddled by the return: s = z -> p_hit.
        let u = update_rule_u(2, pose, &[(0.0, 2.5)], &geom, &sp, &pm).unwrap();
        assert_eq!(u, 0.9);

        // Max rule over two beams crossing the same cell.
        let geom2 = GridGeometry::new(10, 3, 1.0, (0.0, 0.0)).unwrap();
        let cell = geom2.index(2, 1); // center (2.5, 1.5)
        let beam_a = (0.0, 4.0); // ramp value at s = 2.5: 0.08 * 2.5 + 0.1 = 0.3
        let beam_b = (0.0, 2.5); // p_hit at the same cell
        let ua = update_rule_u(cell, (0.0, 1.5, 0.0), &[beam_a], &geom2, &sp, &pm).unwrap();
        let ub = update_rule_u(cell, (0.0, 1.5, 0.0), &[beam_b], &geom2, &sp, &pm).unwrap();
        assert!((ua - 0.3).abs() < 1e-12);
        assert_eq!(ub, 0.9);
        let u = update_rule_u(cell, (0.0, 1.5, 0.0), &[beam_a, beam_b], &geom2, &sp, &pm).unwrap();
        assert_eq!(u, ub.max(ua));
    }

    #[test]
    fn batch_factors_match_per_cell_rule() {
        let geom = GridGeometry::new(12, 12, 0.5, (0.0, 0.0)).unwrap();
        let sp = SensorSpec::new(7, std::f64::consts::PI, 0.0, 3.0, 0.05).unwrap();
        let pm = InverseModelParams::new(0.1, 0.5, 0.9).unwrap();
        let pose = (3.1, 2.9, 0.7);
        let scan: Vec<(f64, f64)> = sp
            .beam_angles(pose.2)
            .into_iter()
            .enumerate()
            .map(|(k, a)| (a, 0.5 + 0.35 * k as f64))
            .collect();
        let batch = scan_update_factors(pose, &scan, &geom, &sp, &pm).unwrap();
        assert!(!batch.is_empty());
        for &(idx, u) in &batch {
            let direct = update_rule_u(idx, pose, &scan, &geom, &sp, &pm).unwrap();
            assert!((u - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn simulate_measurement_branches() {
        let sp = spec(2.0, 1e-9);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let z = simulate_measurement(Some(1.0), &sp, &mut rng);
        assert!((z - 1.0).abs() < 1e-6);

        let sp2 = spec(2.0, 0.05);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mean: f64 =
            (0..2000).map(|_| simulate_measurement(None, &sp2, &mut rng)).sum::<f64>() / 2000.0;
        assert!((mean - 2.0).abs() < 0.01);
        for _ in 0..2000 {
            let z = simulate_measurement(Some(0.0), &sp2, &mut rng);
            assert!((0.0..=sp2.s_max + 3.0 * sp2.sigma).contains(&z));
        }
    }

    #[test]
    fn simulate_measurement_seeded_regression() {
        // Frozen draw from the seeded generator; guards the rng plumbing.
        let sp = spec(2.0, 0.05);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let z = simulate_measurement(Some(1.0), &sp, &mut rng);
        assert!((z - 1.0116907096661732).abs() < 1e-12, "got {z}");
    }

    proptest! {
        #[test]
        fn trace_distances_increase_and_cells_adjacent(
            px in 0.6_f64..7.4,
            py in 0.6_f64..7.4,
            angle in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let geom = GridGeometry::new(16, 16, 0.5, (0.0, 0.0)).unwrap();
            let sp = SensorSpec::new(1, 0.0, 0.0, 3.0, 0.1).unwrap();
            let trace = cast_beam(&geom, (px, py), angle, &sp).unwrap();
            for w in trace.cells.windows(2) {
                prop_assert!(w[1].1 > w[0].1);
                let (ax, ay) = geom.cell_of_index(w[0].0);
                let (bx, by) = geom.cell_of_index(w[1].0);
                let ddx = (ax as i64 - bx as i64).abs();
                let ddy = (ay as i64 - by as i64).abs();
                prop_assert!(ddx <= 1 && ddy <= 1 && ddx + ddy >= 1);
            }
            for &(_, s) in &trace.cells {
                prop_assert!(s > 0.0 && s <= sp.s_max + sp.sigma + 1e-12);
            }
        }

        #[test]
        fn marginal_weights_sum_to_one(probs in proptest::collection::vec(0.0_f64..=1.0, 1..10)) {
            let sp = SensorSpec::new(1, 0.0, 0.0, 2.0, 0.05).unwrap();
            let dists: Vec<f64> = (0..probs.len()).map(|k| 0.3 + 0.2 * k as f64).collect();
            let m = range_marginal(&probs, &dists, &sp).unwrap();
            let total: f64 = m.components().iter().map(|&(w, _)| w).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
