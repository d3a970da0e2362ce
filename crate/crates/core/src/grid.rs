//! Occupancy grid data model and map-level metrics.
//!
//! A grid covers a fixed world bounding box at uniform resolution. Every cell
//! carries an occupancy probability in `[p_min, 1]`, an `explored` flag and a
//! count of measurement updates. Unexplored cells sit at probability 1, which
//! makes never-observed cells (obstacle interiors, the map frame) converge to
//! "occupied" under map sharing.

use crate::error::{Error, Result};
use crate::{Real, DEFAULT_P_MIN};

/// Placement of a grid in the world: cell counts, meters per cell, and the
/// world coordinates of the corner of cell `(0, 0)`. `y` grows upward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry<R> {
    pub width: usize,
    pub height: usize,
    pub resolution: R,
    pub origin: (R, R),
}

impl<R: Real> GridGeometry<R> {
    pub fn new(width: usize, height: usize, resolution: R, origin: (R, R)) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if resolution <= R::zero() {
            return Err(Error::parameter("resolution must be positive"));
        }
        Ok(Self { width, height, resolution, origin })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, cx: usize, cy: usize) -> usize {
        debug_assert!(cx < self.width && cy < self.height);
        cy * self.width + cx
    }

    #[inline]
    pub fn cell_of_index(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    /// World coordinates of a cell center.
    #[inline]
    pub fn cell_center(&self, cx: usize, cy: usize) -> (R, R) {
        let half = R::of(0.5);
        (
            self.origin.0 + self.resolution * (R::of(cx as f64) + half),
            self.origin.1 + self.resolution * (R::of(cy as f64) + half),
        )
    }

    /// Cell containing a world point, or `None` if outside the grid.
    pub fn cell_at(&self, x: R, y: R) -> Option<(usize, usize)> {
        let gx = (x - self.origin.0) / self.resolution;
        let gy = (y - self.origin.1) / self.resolution;
        if gx < R::zero() || gy < R::zero() {
            return None;
        }
        let (cx, cy) = (gx.floor(), gy.floor());
        let (cx, cy) = (cx.to_f64()? as usize, cy.to_f64()? as usize);
        if cx >= self.width || cy >= self.height {
            return None;
        }
        Some((cx, cy))
    }

    pub fn contains_point(&self, x: R, y: R) -> bool {
        self.cell_at(x, y).is_some()
    }

    /// World-space width and height in meters.
    pub fn extent(&self) -> (R, R) {
        (
            self.resolution * R::of(self.width as f64),
            self.resolution * R::of(self.height as f64),
        )
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Probabilistic occupancy map of one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid<R: Real> {
    geom: GridGeometry<R>,
    prob: Vec<R>,
    explored: Vec<bool>,
    update_count: Vec<u32>,
    p_min: R,
}

impl<R: Real> OccupancyGrid<R> {
    /// Fresh map: all cells unexplored at probability 1.
    pub fn new(width: usize, height: usize, resolution: R, origin: (R, R)) -> Result<Self> {
        Ok(Self::from_geometry(GridGeometry::new(width, height, resolution, origin)?))
    }

    pub fn from_geometry(geom: GridGeometry<R>) -> Self {
        let n = geom.n_cells();
        Self {
            geom,
            prob: vec![R::one(); n],
            explored: vec![false; n],
            update_count: vec![0; n],
            p_min: R::of(DEFAULT_P_MIN),
        }
    }

    pub fn with_p_min(mut self, p_min: R) -> Result<Self> {
        if p_min <= R::zero() || p_min >= R::one() {
            return Err(Error::parameter("p_min must lie in (0, 1)"));
        }
        self.p_min = p_min;
        Ok(self)
    }

    #[inline]
    pub fn geometry(&self) -> &GridGeometry<R> {
        &self.geom
    }

    #[inline]
    pub fn p_min(&self) -> R {
        self.p_min
    }

    #[inline]
    pub fn prob(&self, idx: usize) -> R {
        self.prob[idx]
    }

    #[inline]
    pub fn probs(&self) -> &[R] {
        &self.prob
    }

    #[inline]
    pub fn explored(&self, idx: usize) -> bool {
        self.explored[idx]
    }

    /// Occupancy belief for information computations: explored cells report
    /// their probability, unexplored cells the uninformative prior 0.5. The
    /// stored value 1 on unexplored cells is a map-sharing initialization
    /// device, not a belief; a beam aimed at unknown space must look maximally
    /// informative, not certain.
    #[inline]
    pub fn belief(&self, idx: usize) -> R {
        if self.explored[idx] {
            self.prob[idx]
        } else {
            R::of(0.5)
        }
    }

    #[inline]
    pub fn update_count(&self, idx: usize) -> u32 {
        self.update_count[idx]
    }

    /// Set a cell probability (clamped to `[p_min, 1]`) and mark it explored.
    pub fn observe(&mut self, idx: usize, p: R) {
        self.prob[idx] = p.max(self.p_min).min(R::one());
        self.explored[idx] = true;
    }

    pub fn mark_explored(&mut self, idx: usize) {
        self.explored[idx] = true;
    }

    /// Multiply a cell by a measurement factor if the cell is still below the
    /// update cap. Returns true when the factor was applied.
    pub fn apply_measurement_factor(&mut self, idx: usize, u: R, cap: u32) -> bool {
        if self.update_count[idx] >= cap {
            return false;
        }
        self.update_count[idx] += 1;
        let p = self.prob[idx] * u;
        self.observe(idx, p);
        true
    }

    pub(crate) fn set_prob_clamped(&mut self, idx: usize, p: R) {
        self.prob[idx] = p.max(self.p_min).min(R::one());
    }

    pub fn explored_count(&self) -> usize {
        self.explored.iter().filter(|&&e| e).count()
    }

    /// Map entropy in bits: the summed Bernoulli entropy of every explored
    /// cell, with `0 log 0 = 0`. Unexplored cells carry no term.
    pub fn entropy(&self) -> R {
        let mut h = R::zero();
        for (idx, &p) in self.prob.iter().enumerate() {
            if self.explored[idx] {
                h += bernoulli_entropy(p);
            }
        }
        h
    }

    /// Euclidean norm of the explored-cell probability vector; the per-robot
    /// quantity whose spread across the swarm measures consensus.
    pub fn explored_norm(&self) -> R {
        let mut acc = R::zero();
        for (idx, &p) in self.prob.iter().enumerate() {
            if self.explored[idx] {
                acc += p * p;
            }
        }
        acc.sqrt()
    }

    /// Render to 8-bit intensities: `round(p * 255)` clamped to `[0, 255]`.
    /// Unexplored cells sit at probability 1 and therefore map to 255.
    pub fn to_pixels(&self) -> PixelGrid {
        let intensity = self
            .prob
            .iter()
            .map(|&p| {
                let v = (p * R::of(255.0)).round().to_f64().unwrap_or(255.0);
                v.clamp(0.0, 255.0) as u8
            })
            .collect();
        PixelGrid { width: self.geom.width, height: self.geom.height, intensity }
    }
}

/// Bernoulli entropy in bits at success probability `p`, with `0 log 0 = 0`.
pub fn bernoulli_entropy<R: Real>(p: R) -> R {
    let q = R::one() - p;
    let mut h = R::zero();
    if p > R::zero() {
        h -= p * p.log2r();
    }
    if q > R::zero() {
        h -= q * q.log2r();
    }
    h
}

/// Percentage of cells explored in at least one of the maps. Obstacle cells
/// count in the denominator.
pub fn coverage_percent<R: Real>(grids: &[&OccupancyGrid<R>]) -> Result<R> {
    let first = *grids.first().ok_or(Error::NotEnoughGrids { required: 1, got: 0 })?;
    check_same_shape(grids)?;
    let n = first.geom.n_cells();
    let mut covered = 0usize;
    for idx in 0..n {
        if grids.iter().any(|g| g.explored[idx]) {
            covered += 1;
        }
    }
    Ok(R::of(100.0) * R::of(covered as f64) / R::of(n as f64))
}

/// Percent absolute error between a probabilistic map and the true binary map.
pub fn map_error_percent<R: Real>(estimate: &OccupancyGrid<R>, truth: &BinaryGrid) -> Result<R> {
    if estimate.geom.width != truth.width || estimate.geom.height != truth.height {
        return Err(Error::DimensionMismatch(
            estimate.geom.width,
            estimate.geom.height,
            truth.width,
            truth.height,
        ));
    }
    let mut acc = R::zero();
    for (idx, &p) in estimate.prob.iter().enumerate() {
        let t = if truth.occupied[idx] { R::one() } else { R::zero() };
        acc += (p - t).abs();
    }
    Ok(R::of(100.0) * acc / R::of(estimate.geom.n_cells() as f64))
}

/// Relative spread of the per-robot explored-probability norms:
/// `1 - min(norm) / max(norm)`. Zero means the maps agree.
pub fn consensus_spread<R: Real>(grids: &[&OccupancyGrid<R>]) -> Result<R> {
    if grids.len() < 2 {
        return Err(Error::NotEnoughGrids { required: 2, got: grids.len() });
    }
    check_same_shape(grids)?;
    let norms: Vec<R> = grids.iter().map(|g| g.explored_norm()).collect();
    let max = norms.iter().cloned().fold(R::zero(), R::max);
    if max == R::zero() {
        return Ok(R::zero());
    }
    let min = norms.iter().cloned().fold(max, R::min);
    Ok(R::one() - min / max)
}

fn check_same_shape<R: Real>(grids: &[&OccupancyGrid<R>]) -> Result<()> {
    let first = grids[0];
    for g in &grids[1..] {
        if !g.geom.same_shape(&first.geom) {
            return Err(Error::DimensionMismatch(
                first.geom.width,
                first.geom.height,
                g.geom.width,
                g.geom.height,
            ));
        }
    }
    Ok(())
}

/// Ground-truth binary map: `occupied[idx]` per cell, same indexing as
/// [`OccupancyGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    pub width: usize,
    pub height: usize,
    pub occupied: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(width: usize, height: usize, occupied: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if occupied.len() != width * height {
            return Err(Error::parameter("occupancy vector length mismatch"));
        }
        Ok(Self { width, height, occupied })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn index(&self, cx: usize, cy: usize) -> usize {
        cy * self.width + cx
    }

    #[inline]
    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }
}

/// 8-bit intensity image of a map, the substrate for the cubical filtration
/// and for PGM export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    pub width: usize,
    pub height: usize,
    pub intensity: Vec<u8>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, intensity: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if intensity.len() != width * height {
            return Err(Error::parameter("intensity vector length mismatch"));
        }
        Ok(Self { width, height, intensity })
    }

    #[inline]
    pub fn index(&self, cx: usize, cy: usize) -> usize {
        cy * self.width + cx
    }

    /// Binary view with the ground-truth convention: intensity < 128 is
    /// occupied.
    pub fn to_binary(&self) -> BinaryGrid {
        BinaryGrid {
            width: self.width,
            height: self.height,
            occupied: self.intensity.iter().map(|&v| v < 128).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid4() -> OccupancyGrid<f64> {
        OccupancyGrid::new(2, 2, 0.5, (0.0, 0.0)).unwrap()
    }

    #[test]
    fn new_grid_initializes_to_prior() {
        let g = OccupancyGrid::<f64>::new(4, 4, 0.5, (0.0, 0.0)).unwrap();
        assert_eq!(g.geometry().n_cells(), 16);
        assert!(g.probs().iter().all(|&p| p == 1.0));
        assert_eq!(g.explored_count(), 0);
        assert!((0..16).all(|i| g.update_count(i) == 0));

        let single = OccupancyGrid::<f64>::new(1, 1, 0.1, (0.0, 0.0)).unwrap();
        assert_eq!(single.geometry().n_cells(), 1);

        assert!(OccupancyGrid::<f64>::new(0, 4, 0.5, (0.0, 0.0)).is_err());
        assert!(OccupancyGrid::<f64>::new(4, 4, 0.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn entropy_of_uniform_cell_is_one_bit() {
        let mut g = grid4();
        g.observe(0, 0.5);
        assert!((g.entropy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_of_certain_cells_is_zero() {
        let mut g = grid4();
        g.observe(0, 1.0);
        g.observe(1, 1.0);
        assert_eq!(g.entropy(), 0.0);
        // A floor-clamped "free" cell is not exactly certain: its entropy is
        // the Bernoulli entropy of p_min, small but positive.
        g.observe(2, 0.0);
        let eps_clamp = bernoulli_entropy(DEFAULT_P_MIN);
        assert!(g.entropy() > 0.0);
        assert!(g.entropy() <= 3.0 * eps_clamp + 1e-15);
    }

    #[test]
    fn entropy_three_cells_frozen_value() {
        // Two cells at 0.9/0.1 (same Bernoulli entropy) plus one at 0.5:
        // 2 * 0.46899559358928... + 1.
        let mut g = OccupancyGrid::<f64>::new(3, 1, 1.0, (0.0, 0.0)).unwrap();
        g.observe(0, 0.9);
        g.observe(1, 0.1);
        g.observe(2, 0.5);
        assert!((g.entropy() - 1.9379911871785624).abs() < 1e-12);
    }

    #[test]
    fn entropy_unexplored_map_is_zero() {
        assert_eq!(grid4().entropy(), 0.0);
    }

    #[test]
    fn coverage_counts_union_of_explored() {
        let g = grid4();
        assert_eq!(coverage_percent(&[&g]).unwrap(), 0.0);

        let mut a = grid4();
        a.observe(0, 0.5);
        a.observe(1, 0.5);
        assert_eq!(coverage_percent(&[&a]).unwrap(), 50.0);

        let mut b = grid4();
        b.observe(1, 0.5);
        b.observe(2, 0.5);
        assert_eq!(coverage_percent(&[&a, &b]).unwrap(), 75.0);

        assert!(coverage_percent::<f64>(&[]).is_err());
    }

    #[test]
    fn map_error_examples() {
        let mut g = grid4();
        for i in 0..4 {
            g.observe(i, if i % 2 == 0 { 1.0 } else { 0.0 });
        }
        // Clamping keeps "free" cells at p_min, so compare against a truth
        // that matches the clamped values: error is 2 * p_min / 4 * 100.
        let truth = BinaryGrid::new(2, 2, vec![true, false, true, false]).unwrap();
        let err = map_error_percent(&g, &truth).unwrap();
        assert!(err <= 100.0 * 2.0 * DEFAULT_P_MIN / 4.0 + 1e-12);

        let all_one = grid4();
        let all_free = BinaryGrid::filled(2, 2, false).unwrap();
        assert_eq!(map_error_percent(&all_one, &all_free).unwrap(), 100.0);

        let mut two = OccupancyGrid::<f64>::new(2, 1, 1.0, (0.0, 0.0)).unwrap();
        two.observe(0, 0.8);
        two.observe(1, 0.3);
        let t = BinaryGrid::new(2, 1, vec![true, false]).unwrap();
        assert!((map_error_percent(&two, &t).unwrap() - 25.0).abs() < 1e-12);

        let wide = BinaryGrid::filled(3, 1, false).unwrap();
        assert!(map_error_percent(&two, &wide).is_err());
    }

    #[test]
    fn spread_examples() {
        let mut a = grid4();
        a.observe(0, 0.7);
        let b = a.clone();
        assert_eq!(consensus_spread(&[&a, &b]).unwrap(), 0.0);

        // Norms 10 and 9.875 -> spread 0.0125.
        let mut big_a = OccupancyGrid::<f64>::new(100, 1, 1.0, (0.0, 0.0)).unwrap();
        let mut big_b = OccupancyGrid::<f64>::new(100, 1, 1.0, (0.0, 0.0)).unwrap();
        for i in 0..100 {
            big_a.observe(i, 1.0);
        }
        for i in 0..97 {
            big_b.observe(i, 1.0);
        }
        // 9.875^2 = 97.515625 = 97 + 33/64
        big_b.observe(97, (33.0_f64 / 64.0).sqrt());
        assert!((big_a.explored_norm() - 10.0).abs() < 1e-12);
        assert!((big_b.explored_norm() - 9.875).abs() < 1e-12);
        assert!((consensus_spread(&[&big_a, &big_b]).unwrap() - 0.0125).abs() < 1e-12);

        assert!(consensus_spread(&[&a]).is_err());
    }

    #[test]
    fn pixel_scaling() {
        let mut g = OccupancyGrid::<f64>::new(3, 1, 1.0, (0.0, 0.0)).unwrap();
        g.observe(0, 1.0);
        g.observe(1, 0.8);
        g.observe(2, 0.5);
        let px = g.to_pixels();
        assert_eq!(px.intensity, vec![255, 204, 128]);
    }

    #[test]
    fn pixel_roundtrip_error_bound() {
        let mut g = OccupancyGrid::<f64>::new(256, 1, 1.0, (0.0, 0.0)).unwrap();
        for i in 0..256 {
            g.observe(i, i as f64 / 255.0);
        }
        let px = g.to_pixels();
        for i in 0..256 {
            let back = px.intensity[i] as f64 / 255.0;
            assert!((back - g.prob(i)).abs() <= 1.0 / 510.0 + 1e-15);
        }
    }

    #[test]
    fn observe_clamps_to_floor() {
        let mut g = grid4();
        g.observe(0, 0.0);
        assert_eq!(g.prob(0), DEFAULT_P_MIN);
        g.observe(0, 2.0);
        assert_eq!(g.prob(0), 1.0);
    }

    #[test]
    fn measurement_cap_gates_updates() {
        let mut g = grid4();
        for _ in 0..3 {
            assert!(g.apply_measurement_factor(0, 0.5, 3));
        }
        let p = g.prob(0);
        assert!(!g.apply_measurement_factor(0, 0.5, 3));
        assert_eq!(g.prob(0), p);
        assert_eq!(g.update_count(0), 3);
    }

    #[test]
    fn geometry_roundtrips_points() {
        let geom = GridGeometry::<f64>::new(8, 4, 0.5, (-1.0, 2.0)).unwrap();
        assert_eq!(geom.cell_at(-1.0, 2.0), Some((0, 0)));
        assert_eq!(geom.cell_at(-0.75, 2.25), Some((0, 0)));
        assert_eq!(geom.cell_at(2.99, 3.99), Some((7, 3)));
        assert_eq!(geom.cell_at(3.0, 2.0), None);
        assert_eq!(geom.cell_at(-1.01, 2.0), None);
        let (cx, cy) = geom.cell_center(1, 2);
        assert!((cx - (-0.25)).abs() < 1e-12 && (cy - 3.25).abs() < 1e-12);
    }

    #[test]
    fn works_at_f32() {
        let mut g = OccupancyGrid::<f32>::new(2, 2, 0.5, (0.0, 0.0)).unwrap();
        g.observe(0, 0.5);
        assert!((g.entropy() - 1.0).abs() < 1e-6);
    }
}
