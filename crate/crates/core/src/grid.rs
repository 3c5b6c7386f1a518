//! Uniform cell-centred grids on the truncation box `[-R, R]^n`.
//!
//! Integrals are midpoint sums over cell centres. The singular diagonal is
//! excluded from every pair sum, so distinct nodes are always at least `h`
//! apart.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point of `R^n`; the second coordinate is zero in one dimension.
pub type Point = [f64; 2];

/// Largest admissible `R / h`.
pub const MAX_CELLS_PER_HALF_AXIS: usize = 2000;

#[inline]
pub fn dist(x: &Point, y: &Point) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    (dx * dx + dy * dy).sqrt()
}

/// Description of the open set `Ω`.
#[derive(Clone)]
pub enum OmegaSpec {
    Box {
        lo: Point,
        hi: Point,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    /// Arbitrary predicate together with a bounding box of the set.
    Predicate {
        contains: Arc<dyn Fn(&Point) -> bool + Send + Sync>,
        lo: Point,
        hi: Point,
    },
}

impl fmt::Debug for OmegaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaSpec::Box { lo, hi } => write!(f, "Box({lo:?}, {hi:?})"),
            OmegaSpec::Ball { center, radius } => write!(f, "Ball({center:?}, {radius})"),
            OmegaSpec::Predicate { lo, hi, .. } => write!(f, "Predicate(within {lo:?}..{hi:?})"),
        }
    }
}

impl OmegaSpec {
    /// The open interval `(lo, hi)` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Self {
        OmegaSpec::Box { lo: [lo, 0.0], hi: [hi, 0.0] }
    }

    pub fn contains(&self, x: &Point, n: usize) -> bool {
        match self {
            OmegaSpec::Box { lo, hi } => (0..n).all(|k| lo[k] < x[k] && x[k] < hi[k]),
            OmegaSpec::Ball { center, radius } => dist(x, center) < *radius,
            OmegaSpec::Predicate { contains, .. } => contains(x),
        }
    }

    /// Axis-aligned bounding box of the set.
    pub fn extent(&self) -> (Point, Point) {
        match self {
            OmegaSpec::Box { lo, hi } | OmegaSpec::Predicate { lo, hi, .. } => (*lo, *hi),
            OmegaSpec::Ball { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GridOptions {
    /// Required distance between `Ω` and the box boundary; defaults to one
    /// cell width.
    pub min_margin: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    h: f64,
    radius: f64,
    cells_per_axis: usize,
    nodes: Vec<Point>,
    interior: Vec<bool>,
    interior_idx: Vec<usize>,
    exterior_idx: Vec<usize>,
}

impl Grid {
    pub fn build(n: usize, radius: f64, h: f64, omega: &OmegaSpec) -> Result<Self> {
        Self::build_with(n, radius, h, omega, GridOptions::default())
    }

    pub fn build_with(n: usize, radius: f64, h: f64, omega: &OmegaSpec, opts: GridOptions) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {n}")));
        }
        if !(h > 0.0 && h.is_finite() && radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("need h > 0 and R > 0, got h = {h}, R = {radius}")));
        }
        let half = radius / h;
        if half > MAX_CELLS_PER_HALF_AXIS as f64 {
            return Err(Error::ResolutionTooFine { per_axis: half.ceil() as usize, limit: MAX_CELLS_PER_HALF_AXIS });
        }
        let m = (2.0 * half).round();
        if m < 1.0 || ((2.0 * half) - m).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::InvalidParameter(format!("2R/h = {} is not an integer", 2.0 * half)));
        }
        let m = m as usize;

        let (lo, hi) = omega.extent();
        let margin = (0..n).map(|k| (radius - hi[k]).min(lo[k] + radius)).fold(f64::INFINITY, f64::min);
        let required = opts.min_margin.unwrap_or(h);
        if !(margin > 0.0 && margin >= required) {
            return Err(Error::DomainTouchesBoundary { margin, required });
        }

        let coord = |i: usize| -radius + h * (i as f64 + 0.5);
        let nodes: Vec<Point> = if n == 1 {
            (0..m).map(|i| [coord(i), 0.0]).collect()
        } else {
            (0..m).flat_map(|iy| (0..m).map(move |ix| [coord(ix), coord(iy)])).collect()
        };
        let interior: Vec<bool> = nodes.iter().map(|x| omega.contains(x, n)).collect();
        let interior_idx = (0..nodes.len()).filter(|&i| interior[i]).collect::<Vec<_>>();
        let exterior_idx = (0..nodes.len()).filter(|&i| !interior[i]).collect::<Vec<_>>();
        if interior_idx.is_empty() {
            return Err(Error::InvalidParameter("domain contains no cell centre".into()));
        }
        Ok(Self { n, h, radius, cells_per_axis: m, nodes, interior, interior_idx, exterior_idx })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Half side `R` of the truncation box.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Point {
        &self.nodes[i]
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior[i]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn interior_indices(&self) -> &[usize] {
        &self.interior_idx
    }

    pub fn exterior_indices(&self) -> &[usize] {
        &self.exterior_idx
    }

    /// `h^n`
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Product of the two cell measures; the diagonal is excluded.
    pub fn pair_weight(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::DiagonalPair(i));
        }
        Ok(self.cell_measure() * self.cell_measure())
    }

    /// Membership in the discrete `C_Ω`: off-diagonal and not both exterior.
    pub fn in_pair_region(&self, i: usize, j: usize) -> bool {
        i != j && (self.interior[i] || self.interior[j])
    }

    /// Nodes strictly inside `B_r(x0)`, in grid order.
    pub fn ball_nodes(&self, x0: &Point, r: f64) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| dist(&self.nodes[i], x0) < r).collect()
    }

    /// Discrete `|Ω|`.
    pub fn domain_measure(&self) -> f64 {
        self.interior_idx.len() as f64 * self.cell_measure()
    }

    /// Distance from `x0` to the boundary of the box.
    pub fn dist_to_boundary(&self, x0: &Point) -> f64 {
        (0..self.n).map(|k| self.radius - x0[k].abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn ball_in_box(&self, x0: &Point, r: f64) -> bool {
        r > 0.0 && self.dist_to_boundary(x0) >= r
    }

    /// Every node within `B_r(x0)` is interior and the ball reaches at least
    /// one node.
    pub fn ball_in_domain(&self, x0: &Point, r: f64) -> bool {
        let ball = self.ball_nodes(x0, r);
        !ball.is_empty() && ball.iter().all(|&i| self.interior[i]) && self.ball_in_box(x0, r)
    }
}

/// `|S^{n-1}|`, i.e. `n ω_n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unreachable!("dimension is validated to be 1 or 2"),
    }
}

/// `∫_{|y| > rho} |y|^{-(n+e)} dy = n ω_n rho^{-e} / e` for `e > 0`.
pub fn radial_tail_integral(n: usize, e: f64, rho: f64) -> f64 {
    sphere_area(n) * rho.powf(-e) / e
}

/// Analytic value of `∫_{|y-x0| > R'} |c|^{ℓ-1} |y-x0|^{-(n+mℓ)} dy` where
/// `R'` is the distance from `x0` to the box boundary and `c` the constant
/// datum beyond the box.
pub fn exterior_closure(grid: &Grid, x0: &Point, m: f64, ell: f64, far_field: Option<f64>) -> Result<f64> {
    let c = far_field.ok_or(Error::NonconstantExteriorBeyondBox)?;
    if c == 0.0 {
        return Ok(0.0);
    }
    let rho = grid.dist_to_boundary(x0);
    if rho <= 0.0 {
        return Err(Error::BallOutsideBox { radius: rho });
    }
    Ok(c.abs().powf(ell - 1.0) * radial_tail_integral(grid.dim(), m * ell, rho))
}

/// Nodal values on a grid, with the constant value assumed beyond the box.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    values: Vec<f64>,
    /// Value of the function beyond the truncation box, when constant there.
    pub far_field: Option<f64>,
    /// Exterior values are Dirichlet data and may not be changed.
    pub exterior_frozen: bool,
}

impl DiscreteFunction {
    pub fn new(grid: &Grid, values: Vec<f64>, far_field: Option<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonfiniteValue(i));
        }
        if matches!(far_field, Some(c) if !c.is_finite()) {
            return Err(Error::InvalidParameter("far field must be finite".into()));
        }
        Ok(Self { values, far_field, exterior_frozen: false })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&Point) -> f64, far_field: Option<f64>) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(f).collect(), far_field)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { values: vec![c; grid.len()], far_field: Some(c), exterior_frozen: false }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn frozen(mut self) -> Self {
        self.exterior_frozen = true;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, grid: &Grid, i: usize, v: f64) -> Result<()> {
        if self.exterior_frozen && !grid.is_interior(i) {
            return Err(Error::FrozenExterior(i));
        }
        if !v.is_finite() {
            return Err(Error::NonfiniteValue(i));
        }
        self.values[i] = v;
        Ok(())
    }

    /// Values at interior nodes in grid order.
    pub fn interior_values(&self, grid: &Grid) -> Vec<f64> {
        grid.interior_indices().iter().map(|&i| self.values[i]).collect()
    }

    /// Overwrites the interior values; exterior values are untouched.
    pub fn set_interior_values(&mut self, grid: &Grid, vals: &[f64]) {
        debug_assert_eq!(vals.len(), grid.interior_indices().len());
        for (&i, &v) in grid.interior_indices().iter().zip(vals) {
            self.values[i] = v;
        }
    }

    /// Adds `c` everywhere, including beyond the box.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            far_field: self.far_field.map(|f| f + c),
            exterior_frozen: self.exterior_frozen,
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * lambda).collect(),
            far_field: self.far_field.map(|f| f * lambda),
            exterior_frozen: self.exterior_frozen,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            far_field: self.far_field.map(&f),
            exterior_frozen: self.exterior_frozen,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let inner = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        inner.max(self.far_field.map_or(0.0, f64::abs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_example() {
        let g = Grid::build(1, 4.0, 0.5, &OmegaSpec::interval(-1.0, 1.0)).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.interior_indices().len(), 4);
        assert_eq!(g.node(0)[0], -3.75);
        assert_eq!(g.node(15)[0], 3.75);
        let xs: Vec<f64> = g.interior_indices().iter().map(|&i| g.node(i)[0]).collect();
        assert_eq!(xs, vec![-0.75, -0.25, 0.25, 0.75]);
    }

    #[test]
    fn zero_margin_rejected() {
        let r = Grid::build(1, 1.0, 0.5, &OmegaSpec::interval(-1.0, 1.0));
        assert!(matches!(r, Err(Error::DomainTouchesBoundary { .. })));
    }

    #[test]
    fn two_dimensional_example() {
        let g = Grid::build(2, 2.0, 1.0, &OmegaSpec::Ball { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        assert_eq!(g.len(), 16);
        let mut pts: Vec<Point> = g.interior_indices().iter().map(|&i| *g.node(i)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]]);
    }

    #[test]
    fn resolution_guard() {
        let r = Grid::build(1, 10.0, 0.001, &OmegaSpec::interval(-1.0, 1.0));
        assert!(matches!(r, Err(Error::ResolutionTooFine { .. })));
    }

    #[test]
    fn weights() {
        let g = Grid::build(1, 4.0, 0.5, &OmegaSpec::interval(-1.0, 1.0)).unwrap();
        assert_eq!(g.pair_weight(0, 3).unwrap(), 0.25);
        assert!(matches!(g.pair_weight(2, 2), Err(Error::DiagonalPair(2))));
        let g2 = Grid::build(2, 2.0, 1.0, &OmegaSpec::Ball { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        assert_eq!(g2.pair_weight(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn pair_region_is_symmetric_and_skips_exterior_pairs() {
        let g = Grid::build(1, 4.0, 0.5, &OmegaSpec::interval(-1.0, 1.0)).unwrap();
        for i in 0..g.len() {
            assert!(!g.in_pair_region(i, i));
            for j in 0..g.len() {
                assert_eq!(g.in_pair_region(i, j), g.in_pair_region(j, i));
                if !g.is_interior(i) && !g.is_interior(j) {
                    assert!(!g.in_pair_region(i, j));
                }
            }
        }
    }

    #[test]
    fn distinct_nodes_are_separated() {
        let g = Grid::build(2, 1.5, 0.5, &OmegaSpec::Ball { center: [0.0, 0.0], radius: 0.9 }).unwrap();
        for i in 0..g.len() {
            for j in 0..i {
                assert!(dist(g.node(i), g.node(j)) >= g.spacing() - 1e-15);
            }
        }
    }

    #[test]
    fn interior_measure_converges() {
        let omega = OmegaSpec::Ball { center: [0.0, 0.0], radius: 1.0 };
        let coarse = Grid::build(2, 2.0, 0.1, &omega).unwrap().domain_measure();
        let fine = Grid::build(2, 2.0, 0.05, &omega).unwrap().domain_measure();
        assert!((coarse / PI - 1.0).abs() < 0.1);
        assert!((fine / PI - 1.0).abs() < 0.1);
        assert!((fine - PI).abs() <= (coarse - PI).abs() + 1e-12);
    }

    #[test]
    fn closure_examples() {
        let g = Grid::build(1, 4.0, 0.5, &OmegaSpec::interval(-1.0, 1.0)).unwrap();
        assert_eq!(exterior_closure(&g, &[0.0, 0.0], 0.5, 2.0, Some(0.0)).unwrap(), 0.0);
        let v = exterior_closure(&g, &[0.0, 0.0], 0.5, 2.0, Some(1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(matches!(exterior_closure(&g, &[0.0, 0.0], 0.5, 2.0, None), Err(Error::NonconstantExteriorBeyondBox)));
        let g2 = Grid::build(2, 4.0, 1.0, &OmegaSpec::Ball { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let v = exterior_closure(&g2, &[0.0, 0.0], 0.5, 2.0, Some(1.0)).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn frozen_exterior_rejects_writes() {
        let g = Grid::build(1, 4.0, 0.5, &OmegaSpec::interval(-1.0, 1.0)).unwrap();
        let mut u = DiscreteFunction::zeros(&g).frozen();
        assert!(matches!(u.set(&g, 0, 1.0), Err(Error::FrozenExterior(0))));
        let i = g.interior_indices()[0];
        u.set(&g, i, 1.0).unwrap();
        assert_eq!(u.get(i), 1.0);
        assert!(DiscreteFunction::new(&g, vec![0.0; 3], None).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(DiscreteFunction::new(&g, v, None), Err(Error::NonfiniteValue(3))));
    }
}
