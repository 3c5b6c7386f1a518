//! Densities, modular, seminorms, the discrete energy and its gradient, and
//! nonlocal tails.
//!
//! Every pair sum is split into rows (one per interior node, or one per node
//! of the summation set). Rows are evaluated in parallel and the row totals
//! are added serially in row order, so results do not depend on the number
//! of threads.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dist, exterior_closure, radial_tail_integral, DiscreteFunction, Grid, Point};
use crate::params::{Coefficient, ExponentConfig, KernelPair};

/// Upper bound on cached pair weights per table (interior rows x nodes).
const CACHE_LIMIT: usize = 4_000_000;

/// `|τ|^ℓ` with fast paths for the common integer exponents.
#[inline]
pub(crate) fn pow_abs(tau: f64, ell: f64) -> f64 {
    let a = tau.abs();
    if ell == 2.0 {
        a * a
    } else if ell == 1.0 {
        a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(ell)
    }
}

/// `Φ_ℓ(τ) = |τ|^{ℓ-2} τ`, taken as 0 at `τ = 0`.
#[inline]
pub fn signed_power(tau: f64, ell: f64) -> f64 {
    if tau == 0.0 {
        0.0
    } else if ell == 2.0 {
        tau
    } else {
        pow_abs(tau, ell - 1.0).copysign(tau)
    }
}

/// Precomputed `K_sp w` and `a K_tq w` for every interior row.
struct PairCache {
    w_sp: Vec<f64>,
    w_tq: Vec<f64>,
}

/// Grid, exponents, coefficient and kernels of one problem.
pub struct EnergyContext {
    grid: Arc<Grid>,
    cfg: ExponentConfig,
    coeff: Coefficient,
    kernels: KernelPair,
    cache: OnceLock<Option<PairCache>>,
}

impl std::fmt::Debug for EnergyContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergyContext")
            .field("nodes", &self.grid.len())
            .field("cfg", &self.cfg)
            .field("coeff", &self.coeff)
            .field("kernels", &self.kernels)
            .finish()
    }
}

impl EnergyContext {
    pub fn new(grid: Arc<Grid>, cfg: ExponentConfig, coeff: Coefficient, kernels: KernelPair) -> Result<Self> {
        if grid.dim() != cfg.n {
            return Err(Error::InvalidParameter(format!(
                "grid dimension {} differs from exponent dimension {}",
                grid.dim(),
                cfg.n
            )));
        }
        let (e_sp, e_tq) = kernels.exponents();
        if (e_sp - cfg.dim() - cfg.sp()).abs() > 1e-12 || (e_tq - cfg.dim() - cfg.tq()).abs() > 1e-12 {
            return Err(Error::InvalidParameter("kernels were built for different exponents".into()));
        }
        Ok(Self { grid, cfg, coeff, kernels, cache: OnceLock::new() })
    }

    /// Model kernels with the given coefficient.
    pub fn model(grid: Arc<Grid>, cfg: ExponentConfig, coeff: Coefficient) -> Result<Self> {
        let kernels = KernelPair::model(&cfg);
        Self::new(grid, cfg, coeff, kernels)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cfg(&self) -> &ExponentConfig {
        &self.cfg
    }

    pub fn coeff(&self) -> &Coefficient {
        &self.coeff
    }

    pub fn kernels(&self) -> &KernelPair {
        &self.kernels
    }

    fn compute_row(&self, i: usize, w_sp: &mut [f64], w_tq: &mut [f64]) {
        let nodes = self.grid.nodes();
        let w = self.grid.cell_measure() * self.grid.cell_measure();
        let xi = &nodes[i];
        for (j, xj) in nodes.iter().enumerate() {
            if j == i {
                w_sp[j] = 0.0;
                w_tq[j] = 0.0;
            } else {
                w_sp[j] = self.kernels.k_sp(xi, xj) * w;
                let a = self.coeff.eval(xi, xj);
                w_tq[j] = if a == 0.0 { 0.0 } else { a * self.kernels.k_tq(xi, xj) * w };
            }
        }
    }

    fn cache(&self) -> Option<&PairCache> {
        self.cache
            .get_or_init(|| {
                let n = self.grid.len();
                let rows = self.grid.interior_indices().len();
                if rows.saturating_mul(n) > CACHE_LIMIT {
                    return None;
                }
                let mut w_sp = vec![0.0; rows * n];
                let mut w_tq = vec![0.0; rows * n];
                w_sp.par_chunks_mut(n)
                    .zip(w_tq.par_chunks_mut(n))
                    .enumerate()
                    .for_each(|(k, (a, b))| self.compute_row(self.grid.interior_indices()[k], a, b));
                Some(PairCache { w_sp, w_tq })
            })
            .as_ref()
    }

    /// Calls `f` with the weights `K_sp w` and `a K_tq w` of interior row `k`
    /// against every node (zero on the diagonal).
    pub(crate) fn with_row<R>(&self, k: usize, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
        let n = self.grid.len();
        match self.cache() {
            Some(c) => f(&c.w_sp[k * n..(k + 1) * n], &c.w_tq[k * n..(k + 1) * n]),
            None => {
                let mut a = vec![0.0; n];
                let mut b = vec![0.0; n];
                self.compute_row(self.grid.interior_indices()[k], &mut a, &mut b);
                f(&a, &b)
            }
        }
    }

    fn check_len(&self, v: &DiscreteFunction) -> Result<()> {
        if v.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), got: v.len() });
        }
        Ok(())
    }
}

/// Adds row totals serially in row order.
fn ordered_sum(rows: Vec<f64>) -> f64 {
    rows.into_iter().sum()
}

/// `H(x, y, τ) = τ^p/|x-y|^{sp} + a(x,y) τ^q/|x-y|^{tq}`.
pub fn h_density(ctx: &EnergyContext, x: &Point, y: &Point, tau: f64) -> Result<f64> {
    density(ctx, x, y, tau, 0.0)
}

/// `h(x, y, τ) = τ^{p-1}/|x-y|^{sp} + a(x,y) τ^{q-1}/|x-y|^{tq}`.
pub fn h_deriv_density(ctx: &EnergyContext, x: &Point, y: &Point, tau: f64) -> Result<f64> {
    density(ctx, x, y, tau, 1.0)
}

fn density(ctx: &EnergyContext, x: &Point, y: &Point, tau: f64, lower: f64) -> Result<f64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be >= 0")));
    }
    Ok(density_unchecked(ctx, x, y, r, tau, lower))
}

#[inline]
pub(crate) fn density_unchecked(ctx: &EnergyContext, x: &Point, y: &Point, r: f64, tau: f64, lower: f64) -> f64 {
    let c = ctx.cfg();
    if tau == 0.0 {
        return 0.0;
    }
    let first = pow_abs(tau, c.p - lower) / r.powf(c.sp());
    let a = ctx.coeff().eval(x, y);
    if a == 0.0 {
        first
    } else {
        first + a * pow_abs(tau, c.q - lower) / r.powf(c.tq())
    }
}

/// Sum over ordered off-diagonal pairs of `set × set` of `f(i, j)`, rows in
/// parallel.
pub(crate) fn pair_sum(set: &[usize], f: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let rows: Vec<f64> =
        set.par_iter().map(|&i| set.iter().filter(|&&j| j != i).map(|&j| f(i, j)).sum::<f64>()).collect();
    ordered_sum(rows)
}

/// `ϱ(v; S) = Σ_{i≠j∈S} H(x_i, x_j, |v_i - v_j|) |x_i - x_j|^{-n} w`.
pub fn modular(ctx: &EnergyContext, v: &DiscreteFunction, set: &[usize]) -> Result<f64> {
    ctx.check_len(v)?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let grid = ctx.grid();
    let nodes = grid.nodes();
    let w = grid.cell_measure() * grid.cell_measure();
    let n = ctx.cfg().dim();
    let vals = v.values();
    Ok(pair_sum(set, |i, j| {
        let r = dist(&nodes[i], &nodes[j]);
        density_unchecked(ctx, &nodes[i], &nodes[j], r, (vals[i] - vals[j]).abs(), 0.0) * r.powf(-n) * w
    }))
}

/// `Σ_{i≠j∈S} |v_i - v_j|^ℓ |x_i - x_j|^{-n-mℓ} w`.
pub fn gagliardo_sum(grid: &Grid, v: &[f64], set: &[usize], m: f64, ell: f64) -> f64 {
    let nodes = grid.nodes();
    let w = grid.cell_measure() * grid.cell_measure();
    let e = grid.dim() as f64 + m * ell;
    pair_sum(set, |i, j| {
        let d = v[i] - v[j];
        if d == 0.0 {
            0.0
        } else {
            pow_abs(d, ell) * dist(&nodes[i], &nodes[j]).powf(-e) * w
        }
    })
}

/// Discrete Gagliardo seminorm `[v]_{m,ℓ;S}`.
pub fn seminorm(ctx: &EnergyContext, v: &DiscreteFunction, set: &[usize], m: f64, ell: f64) -> Result<f64> {
    ctx.check_len(v)?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(ell >= 1.0 && m > 0.0 && m < 1.0) {
        return Err(Error::InvalidParameter(format!("need ℓ >= 1 and m in (0,1), got ℓ = {ell}, m = {m}")));
    }
    Ok(gagliardo_sum(ctx.grid(), v.values(), set, m, ell).powf(1.0 / ell))
}

/// The discrete energy over the pair region.
pub fn energy(ctx: &EnergyContext, v: &DiscreteFunction) -> Result<f64> {
    ctx.check_len(v)?;
    Ok(energy_unchecked(ctx, v.values()))
}

pub(crate) fn energy_unchecked(ctx: &EnergyContext, vals: &[f64]) -> f64 {
    let grid = ctx.grid();
    let (p, q) = (ctx.cfg().p, ctx.cfg().q);
    let mask = grid.interior_mask();
    let interior = grid.interior_indices();
    let rows: Vec<f64> = (0..interior.len())
        .into_par_iter()
        .with_min_len(8)
        .map(|k| {
            let i = interior[k];
            let ui = vals[i];
            ctx.with_row(k, |w_sp, w_tq| {
                let mut acc = 0.0;
                for j in 0..vals.len() {
                    let d = ui - vals[j];
                    if d == 0.0 {
                        continue;
                    }
                    let mut e = pow_abs(d, p) / p * w_sp[j];
                    if w_tq[j] != 0.0 {
                        e += pow_abs(d, q) / q * w_tq[j];
                    }
                    acc += if mask[j] { e } else { 2.0 * e };
                }
                acc
            })
        })
        .collect();
    ordered_sum(rows)
}

/// Gradient of the energy with respect to the interior values, in the order
/// of [`Grid::interior_indices`].
pub fn energy_gradient(ctx: &EnergyContext, u: &DiscreteFunction) -> Result<Vec<f64>> {
    ctx.check_len(u)?;
    Ok(gradient_unchecked(ctx, u.values()))
}

pub(crate) fn gradient_unchecked(ctx: &EnergyContext, vals: &[f64]) -> Vec<f64> {
    let grid = ctx.grid();
    let (p, q) = (ctx.cfg().p, ctx.cfg().q);
    let interior = grid.interior_indices();
    (0..interior.len())
        .into_par_iter()
        .with_min_len(8)
        .map(|k| {
            let ui = vals[interior[k]];
            ctx.with_row(k, |w_sp, w_tq| {
                let mut acc = 0.0;
                for j in 0..vals.len() {
                    let d = ui - vals[j];
                    if d == 0.0 {
                        continue;
                    }
                    acc += signed_power(d, p) * w_sp[j];
                    if w_tq[j] != 0.0 {
                        acc += signed_power(d, q) * w_tq[j];
                    }
                }
                2.0 * acc
            })
        })
        .collect()
}

/// The bilinear pairing of the weak formulation between `u` and a test
/// function vanishing outside `Ω`.
pub fn weak_residual(ctx: &EnergyContext, u: &DiscreteFunction, phi: &DiscreteFunction) -> Result<f64> {
    ctx.check_len(u)?;
    ctx.check_len(phi)?;
    let grid = ctx.grid();
    if let Some(&i) = grid.exterior_indices().iter().find(|&&i| phi.get(i) != 0.0) {
        return Err(Error::TestFunctionNotCompactlySupported(i));
    }
    let (p, q) = (ctx.cfg().p, ctx.cfg().q);
    let mask = grid.interior_mask();
    let interior = grid.interior_indices();
    let (uv, pv) = (u.values(), phi.values());
    let rows: Vec<f64> = (0..interior.len())
        .into_par_iter()
        .with_min_len(8)
        .map(|k| {
            let i = interior[k];
            ctx.with_row(k, |w_sp, w_tq| {
                let mut acc = 0.0;
                for j in 0..uv.len() {
                    let d = uv[i] - uv[j];
                    if d == 0.0 {
                        continue;
                    }
                    let mut psi = signed_power(d, p) * w_sp[j];
                    if w_tq[j] != 0.0 {
                        psi += signed_power(d, q) * w_tq[j];
                    }
                    let dphi = pv[i] - pv[j];
                    acc += if mask[j] { psi * dphi } else { 2.0 * psi * dphi };
                }
                acc
            })
        })
        .collect();
    Ok(ordered_sum(rows))
}

/// Analytic closure parts of a [`TailReport`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TailParts {
    pub p_part: f64,
    pub q_part_sp: f64,
    pub q_part_tq: f64,
}

/// Nonlocal tails of `v` around `B_r(x0)`.
///
/// The grid parts sum over box nodes outside the ball; `closure` holds the
/// analytic contribution of the constant datum beyond the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub center: Point,
    pub radius: f64,
    /// `Σ |v|^{p-1} |x-x0|^{-(n+sp)} h^n`
    pub p_part: f64,
    /// `Σ |v|^{q-1} |x-x0|^{-(n+sp)} h^n`
    pub q_part_sp: f64,
    /// `Σ |v|^{q-1} |x-x0|^{-(n+tq)} h^n`
    pub q_part_tq: f64,
    pub closure: TailParts,
}

impl TailReport {
    pub fn total_p(&self) -> f64 {
        self.p_part + self.closure.p_part
    }

    pub fn total_q_sp(&self) -> f64 {
        self.q_part_sp + self.closure.q_part_sp
    }

    pub fn total_q_tq(&self) -> f64 {
        self.q_part_tq + self.closure.q_part_tq
    }

    /// `T(v; r)` with the given `‖a‖∞`.
    pub fn t_value(&self, a_sup: f64) -> f64 {
        self.total_p() + a_sup * self.total_q_sp()
    }
}

/// `Σ_{|x_i-x0| >= r} |v_i|^{ℓ-1} |x_i-x0|^{-(n+e)} h^n` over box nodes.
pub(crate) fn tail_grid_sum(grid: &Grid, v: &[f64], x0: &Point, r: f64, ell: f64, e: f64) -> f64 {
    let mu = grid.cell_measure();
    let ne = grid.dim() as f64 + e;
    grid.nodes()
        .iter()
        .zip(v)
        .filter_map(|(x, &val)| {
            let d = dist(x, x0);
            (d >= r && val != 0.0).then(|| pow_abs(val, ell - 1.0) * d.powf(-ne) * mu)
        })
        .sum()
}

/// Tail integral `∫_{R^n∖B_r(x0)} |v|^{ℓ-1} |x-x0|^{-(n+e)} dx` including the
/// analytic part beyond the box for the constant far field.
pub fn tail_integral(grid: &Grid, v: &DiscreteFunction, x0: &Point, r: f64, ell: f64, e: f64) -> Result<f64> {
    if !grid.ball_in_box(x0, r) {
        return Err(Error::BallOutsideBox { radius: r });
    }
    let c = v.far_field.ok_or(Error::NonconstantExteriorBeyondBox)?;
    let closure = if c == 0.0 {
        0.0
    } else {
        pow_abs(c, ell - 1.0) * radial_tail_integral(grid.dim(), e, grid.dist_to_boundary(x0))
    };
    Ok(tail_grid_sum(grid, v.values(), x0, r, ell, e) + closure)
}

pub fn tail(ctx: &EnergyContext, v: &DiscreteFunction, x0: &Point, r: f64) -> Result<TailReport> {
    ctx.check_len(v)?;
    let grid = ctx.grid();
    if !grid.ball_in_box(x0, r) {
        return Err(Error::BallOutsideBox { radius: r });
    }
    let c = ctx.cfg();
    let vals = v.values();
    let closure = TailParts {
        p_part: exterior_closure(grid, x0, c.s, c.p, v.far_field)?,
        q_part_sp: match v.far_field {
            Some(f) if f != 0.0 => {
                pow_abs(f, c.q - 1.0) * radial_tail_integral(grid.dim(), c.sp(), grid.dist_to_boundary(x0))
            }
            _ => 0.0,
        },
        q_part_tq: exterior_closure(grid, x0, c.t, c.q, v.far_field)?,
    };
    Ok(TailReport {
        center: *x0,
        radius: r,
        p_part: tail_grid_sum(grid, vals, x0, r, c.p, c.sp()),
        q_part_sp: tail_grid_sum(grid, vals, x0, r, c.q, c.sp()),
        q_part_tq: tail_grid_sum(grid, vals, x0, r, c.q, c.tq()),
        closure,
    })
}
