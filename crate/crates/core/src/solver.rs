//! Minimization of the discrete energy over interior values with the exterior
//! values held fixed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_unchecked, gradient_unchecked, EnergyContext};
use crate::error::{Error, Result};
use crate::grid::{DiscreteFunction, Grid};

/// Starting point of the descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Initialization {
    /// Direct solve when `p = q = 2`, otherwise the mean of the exterior datum.
    #[default]
    Default,
    /// The interior values carried by the datum itself.
    Datum,
    /// Zero in `Ω`.
    Zero,
    Constant {
        value: f64,
    },
    /// Exterior mean plus uniform noise of the given amplitude.
    Random {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stopping threshold on the max-norm of the gradient; `None` selects
    /// `1e-9 (1 + ‖g‖∞^{max(p,q)-1})`.
    pub grad_tol: Option<f64>,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Scale the gradient by the inverse kernel row sums.
    pub precondition: bool,
    pub init: Initialization,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: None,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            precondition: true,
            init: Initialization::Default,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.grad_tol, Some(t) if !(t > 0.0)) {
            return Err(Error::InvalidParameter("grad_tol must be > 0".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter("shrink factor must lie in (0, 1)".into()));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease <= 0.5) {
            return Err(Error::InvalidParameter("sufficient decrease constant must lie in (0, 0.5]".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidParameter("initial step must be positive".into()));
        }
        Ok(())
    }

    pub fn tolerance_for(&self, ctx: &EnergyContext, g: &DiscreteFunction) -> f64 {
        self.grad_tol.unwrap_or_else(|| {
            let c = ctx.cfg();
            1e-9 * (1.0 + exterior_sup(ctx.grid(), g).powf(c.p.max(c.q) - 1.0))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub energy: f64,
    pub iters: usize,
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub grad_norm: f64,
    pub converged: bool,
    /// Energy of every accepted iterate, starting with the initial one.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
    #[serde(skip)]
    pub grad_tol: f64,
}

fn exterior_sup(grid: &Grid, g: &DiscreteFunction) -> f64 {
    let inner = grid.exterior_indices().iter().fold(0.0_f64, |m, &i| m.max(g.get(i).abs()));
    inner.max(g.far_field.map_or(0.0, f64::abs))
}

fn exterior_mean(grid: &Grid, g: &DiscreteFunction) -> f64 {
    let ext = grid.exterior_indices();
    if ext.is_empty() {
        return g.far_field.unwrap_or(0.0);
    }
    let first = g.get(ext[0]);
    if ext.iter().all(|&i| g.get(i) == first) {
        return first;
    }
    ext.iter().map(|&i| g.get(i)).sum::<f64>() / ext.len() as f64
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn initial_point(ctx: &EnergyContext, g: &DiscreteFunction, opts: &SolveOptions) -> Result<DiscreteFunction> {
    let grid = ctx.grid();
    let mut u = g.clone();
    u.exterior_frozen = true;
    let fill = |u: &mut DiscreteFunction, f: &mut dyn FnMut() -> f64| {
        let vals: Vec<f64> = grid.interior_indices().iter().map(|_| f()).collect();
        u.set_interior_values(grid, &vals);
    };
    match &opts.init {
        Initialization::Default => {
            let c = ctx.cfg();
            if c.p == 2.0 && c.q == 2.0 {
                return solve_quadratic(ctx, g);
            }
            let m = exterior_mean(grid, g);
            fill(&mut u, &mut || m);
        }
        Initialization::Datum => {}
        Initialization::Zero => fill(&mut u, &mut || 0.0),
        Initialization::Constant { value } => {
            let v = *value;
            fill(&mut u, &mut || v)
        }
        Initialization::Random { amplitude } => {
            let m = exterior_mean(grid, g);
            let a = *amplitude;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            fill(&mut u, &mut || m + a * (2.0 * rng.gen::<f64>() - 1.0));
        }
    }
    Ok(u)
}

/// Gradient descent with backtracking.
///
/// Trial steps come from the Barzilai–Borwein formula in the preconditioned
/// metric. A trial is accepted on sufficient decrease; when the energy change
/// is lost in rounding, it is accepted instead if the directional derivative
/// at the trial point is still nonpositive, which for a convex energy implies
/// the energy did not increase.
///
/// On exhausting `max_iters` (or stalling) the last iterate is returned with
/// `converged = false`.
pub fn minimize(
    ctx: &EnergyContext,
    g: &DiscreteFunction,
    opts: &SolveOptions,
) -> Result<(DiscreteFunction, SolveReport)> {
    opts.validate()?;
    let grid = ctx.grid();
    if g.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: g.len() });
    }
    let tol = opts.tolerance_for(ctx, g);
    let mut u = initial_point(ctx, g, opts)?;
    let interior = grid.interior_indices().to_vec();
    let mut vals = u.values().to_vec();

    let precond: Vec<f64> = (0..interior.len())
        .map(|k| {
            if opts.precondition {
                ctx.with_row(k, |a, b| 2.0 * a.iter().zip(b).map(|(x, y)| x + y).sum::<f64>())
            } else {
                1.0
            }
        })
        .collect();

    let mut e = energy_unchecked(ctx, &vals);
    let mut grad = gradient_unchecked(ctx, &vals);
    if !e.is_finite() || grad.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonfiniteEncountered(0));
    }
    let mut trace = vec![e];
    let mut step = opts.initial_step;
    let mut bb: Option<f64> = None;
    let mut iters = 0;
    let mut converged = false;
    let mut trial = vals.clone();

    while iters < opts.max_iters {
        if max_abs(&grad) <= tol {
            converged = true;
            break;
        }
        let dir: Vec<f64> = grad.iter().zip(&precond).map(|(g, d)| -g / d).collect();
        let slope = dot(&grad, &dir);
        let mut alpha = bb.unwrap_or(step);
        let noise = 1e-11 * e.abs() + f64::MIN_POSITIVE;
        let mut accepted: Option<(f64, Option<Vec<f64>>)> = None;
        while alpha > 1e-40 {
            for (k, &i) in interior.iter().enumerate() {
                trial[i] = vals[i] + alpha * dir[k];
            }
            let et = energy_unchecked(ctx, &trial);
            if !et.is_finite() {
                alpha *= opts.shrink;
                continue;
            }
            if et <= e + opts.sufficient_decrease * alpha * slope {
                accepted = Some((et, None));
                break;
            }
            if (et - e).abs() <= noise {
                let gt = gradient_unchecked(ctx, &trial);
                if dot(&gt, &dir) <= 0.0 {
                    accepted = Some((et, Some(gt)));
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        let Some((et, gt)) = accepted else {
            break;
        };
        let new_grad = gt.unwrap_or_else(|| gradient_unchecked(ctx, &trial));
        if new_grad.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonfiniteEncountered(iters + 1));
        }
        // Barzilai–Borwein step s'Ds / s'y in the preconditioned metric.
        let mut sds = 0.0;
        let mut sy = 0.0;
        for k in 0..interior.len() {
            let s = alpha * dir[k];
            sds += s * s * precond[k];
            sy += s * (new_grad[k] - grad[k]);
        }
        bb = (sy > 0.0 && sds > 0.0).then(|| (sds / sy).min(1e12));
        step = alpha / opts.shrink;
        std::mem::swap(&mut vals, &mut trial);
        trial.copy_from_slice(&vals);
        grad = new_grad;
        e = et;
        trace.push(e);
        iters += 1;
    }
    if !converged && max_abs(&grad) <= tol {
        converged = true;
    }
    u.set_interior_values(grid, &interior.iter().map(|&i| vals[i]).collect::<Vec<_>>());
    let report =
        SolveReport { energy: e, iters, grad_norm: max_abs(&grad), converged, energy_trace: trace, grad_tol: tol };
    Ok((u, report))
}

/// Direct solve of the linear Euler–Lagrange system when `p = q = 2`.
pub fn solve_quadratic(ctx: &EnergyContext, g: &DiscreteFunction) -> Result<DiscreteFunction> {
    let c = ctx.cfg();
    if c.p != 2.0 || c.q != 2.0 {
        return Err(Error::NotQuadratic { p: c.p, q: c.q });
    }
    let grid = ctx.grid();
    if g.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: g.len() });
    }
    let interior = grid.interior_indices();
    let m = interior.len();
    let mut pos = vec![usize::MAX; grid.len()];
    for (k, &i) in interior.iter().enumerate() {
        pos[i] = k;
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for k in 0..m {
        ctx.with_row(k, |w_sp, w_tq| {
            let mut diag = 0.0;
            for j in 0..grid.len() {
                let cij = w_sp[j] + w_tq[j];
                if cij == 0.0 {
                    continue;
                }
                diag += cij;
                if pos[j] != usize::MAX {
                    a[(k, pos[j])] -= 2.0 * cij;
                } else {
                    b[k] += 2.0 * cij * g.get(j);
                }
            }
            a[(k, k)] += 2.0 * diag;
        });
    }
    let chol = a.clone().cholesky().ok_or(Error::SingularSystem)?;
    let mut x = chol.solve(&b);
    // one step of iterative refinement
    let r = &b - &a * &x;
    x += chol.solve(&r);
    let resid = (&b - &a * &x).norm();
    let scale = b.norm().max(a.norm() * x.norm());
    if scale > 0.0 && resid > 1e-10 * scale {
        return Err(Error::SingularSystem);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let mut u = g.clone();
    u.exterior_frozen = true;
    u.set_interior_values(grid, x.as_slice());
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub min_ok: bool,
    pub max_ok: bool,
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub lower: f64,
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub upper: f64,
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub u_min: f64,
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub u_max: f64,
    #[serde(serialize_with = "crate::io::serialize_f64")]
    pub tol: f64,
}

impl MaxPrincipleReport {
    pub fn passed(&self) -> bool {
        self.min_ok && self.max_ok
    }
}

/// Checks `inf g - tol <= u <= sup g + tol` on `Ω`, the bounds taken over the
/// exterior datum (including the far field), `tol = 1e-6 (1 + ‖g‖∞)`.
pub fn maximum_principle_check(grid: &Grid, u: &DiscreteFunction, g: &DiscreteFunction) -> MaxPrincipleReport {
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for &i in grid.exterior_indices() {
        lower = lower.min(g.get(i));
        upper = upper.max(g.get(i));
    }
    if let Some(f) = g.far_field {
        lower = lower.min(f);
        upper = upper.max(f);
    }
    let tol = 1e-6 * (1.0 + exterior_sup(grid, g));
    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    for &i in grid.interior_indices() {
        u_min = u_min.min(u.get(i));
        u_max = u_max.max(u.get(i));
    }
    MaxPrincipleReport { min_ok: u_min >= lower - tol, max_ok: u_max <= upper + tol, lower, upper, u_min, u_max, tol }
}
