//! Exponents, modulating coefficient and kernels.
//!
//! Structural hypotheses on black-box evaluators are checked by sampling grid
//! node pairs: all pairs when there are at most [`SampleOptions::cap`] of
//! them, otherwise `cap` pairs drawn from a seeded generator.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dist, Point};

/// Tolerance used to decide that `sp == n`.
pub const CRITICAL_TOL: f64 = 1e-12;

/// A symmetric function of two points.
pub type PairFn = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;

/// Validated exponents `(n, s, t, p, q)` with the derived Sobolev conjugates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub n: usize,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
    /// Conjugate `p*_s`.
    pub p_star_s: f64,
    /// Conjugate `q*_t`; `None` when `tq > n` and no override was given.
    pub q_star_t: Option<f64>,
    /// `min{p*_s / p, q*_t / q}` when both conjugates are known.
    pub kappa: Option<f64>,
}

impl ExponentConfig {
    /// Validates the exponent ordering and derives the conjugates.
    ///
    /// `p_star_override` is only consulted when `sp >= n`; at `sp == n` it
    /// defaults to `q + 1`.
    pub fn new(n: usize, s: f64, t: f64, p: f64, q: f64, p_star_override: Option<f64>) -> Result<Self> {
        Self::with_overrides(n, s, t, p, q, p_star_override, None)
    }

    pub fn with_overrides(
        n: usize,
        s: f64,
        t: f64,
        p: f64,
        q: f64,
        p_star_override: Option<f64>,
        q_star_override: Option<f64>,
    ) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {n}")));
        }
        for (name, v) in [("s", s), ("t", t), ("p", p), ("q", q)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if !(0.0 < s && s <= t && t < 1.0) {
            return Err(Error::OrderViolation(format!("s = {s}, t = {t}")));
        }
        if !(1.0 < p && p <= q) {
            return Err(Error::OrderViolation(format!("p = {p}, q = {q}")));
        }
        let p_star_s = conjugate(n, s, p, q, p_star_override).ok_or(Error::ConjugateRequired { which: "p" })?;
        let q_star_t = conjugate(n, t, q, q, q_star_override);
        for (which, v) in [("p*_s", Some(p_star_s)), ("q*_t", q_star_t)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > p) {
                    return Err(Error::InvalidParameter(format!("{which} = {v} must lie in (p, inf)")));
                }
            }
        }
        let kappa = q_star_t.map(|qs| (p_star_s / p).min(qs / q));
        Ok(Self { n, s, t, p, q, p_star_s, q_star_t, kappa })
    }

    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    pub fn tq(&self) -> f64 {
        self.t * self.q
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }
}

/// `nℓ/(n - mℓ)` below the critical line, `upper + 1` on it (or the override),
/// the override above it.
fn conjugate(n: usize, m: f64, ell: f64, upper: f64, over: Option<f64>) -> Option<f64> {
    let nf = n as f64;
    let ml = m * ell;
    if (ml - nf).abs() <= CRITICAL_TOL {
        Some(over.unwrap_or(upper + 1.0))
    } else if ml < nf {
        Some(nf * ell / (nf - ml))
    } else {
        over
    }
}

/// `true` iff `sp >= n`, or `sp < n` and `q <= np/(n - sp)`.
pub fn check_boundedness_assumption(cfg: &ExponentConfig) -> bool {
    let nf = cfg.dim();
    let sp = cfg.sp();
    if sp >= nf {
        return true;
    }
    cfg.q <= nf * cfg.p / (nf - sp)
}

/// `true` iff `tq <= sp + alpha`, evaluated as `tq - sp <= alpha` so the
/// flag flips exactly at the computed gap.
pub fn check_holder_assumption(cfg: &ExponentConfig, alpha: f64) -> bool {
    cfg.tq() - cfg.sp() <= alpha
}

/// The combined condition `q <= min{np/(n-sp), (sp+alpha)/t}` (first entry
/// dropped when `sp >= n`).
pub fn check_combined_assumption(cfg: &ExponentConfig, alpha: f64) -> bool {
    check_boundedness_assumption(cfg) && check_holder_assumption(cfg, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderData {
    pub alpha: f64,
    /// `[a]_alpha`
    pub seminorm: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub cap: usize,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { cap: 1_000_000, seed: 0x5eed }
    }
}

/// Enumerates all ordered pairs, or `cap` random ones when there are more.
pub(crate) fn sample_pairs(len: usize, opts: SampleOptions) -> Vec<(usize, usize)> {
    let total = len.saturating_mul(len);
    if total <= opts.cap {
        (0..len).flat_map(|i| (0..len).map(move |j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.cap).map(|_| (rng.gen_range(0..len), rng.gen_range(0..len))).collect()
    }
}

/// The modulating coefficient `a(x, y)`.
#[derive(Clone)]
pub struct Coefficient {
    eval: PairFn,
    sup_norm: f64,
    holder: Option<HolderData>,
    label: String,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("label", &self.label)
            .field("sup_norm", &self.sup_norm)
            .field("holder", &self.holder)
            .finish()
    }
}

impl Coefficient {
    pub fn custom(
        label: impl Into<String>,
        sup_norm: f64,
        holder: Option<HolderData>,
        eval: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(sup_norm.is_finite() && sup_norm >= 0.0) {
            return Err(Error::InvalidParameter(format!("sup norm {sup_norm}")));
        }
        if let Some(h) = holder {
            if !(h.alpha > 0.0 && h.seminorm >= 0.0 && h.seminorm.is_finite()) {
                return Err(Error::InvalidParameter(format!("hölder data {h:?}")));
            }
        }
        Ok(Self { eval: Arc::new(eval), sup_norm, holder, label: label.into() })
    }

    pub fn zero() -> Self {
        Self::constant(0.0).expect("zero is a valid constant")
    }

    /// `a ≡ c`; Hölder with any exponent and seminorm 0.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParameter(format!("constant coefficient {c} must be >= 0")));
        }
        Self::custom(format!("constant({c})"), c, Some(HolderData { alpha: 1.0, seminorm: 0.0 }), move |_, _| c)
    }

    /// `a(x, y) = (1 + Πcos x_k · Πcos y_k) / 2`, Lipschitz with constant 1/2.
    pub fn cos_product() -> Self {
        Self::custom("cos_product", 1.0, Some(HolderData { alpha: 1.0, seminorm: 0.5 }), |x, y| {
            0.5 * (1.0 + (x[0].cos() * x[1].cos()) * (y[0].cos() * y[1].cos()))
        })
        .expect("valid coefficient")
    }

    /// `a(x, y) = min{|x - y|^alpha, 1}` for `alpha ∈ (0, 1]`.
    pub fn clipped_power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("clipped power exponent {alpha} must lie in (0, 1]")));
        }
        Self::custom(format!("clipped_power({alpha})"), 1.0, Some(HolderData { alpha, seminorm: 1.0 }), move |x, y| {
            dist(x, y).powf(alpha).min(1.0)
        })
    }

    #[inline]
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        (self.eval)(x, y)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn holder(&self) -> Option<HolderData> {
        self.holder
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Samples symmetry, the `[0, ‖a‖∞]` bound and, when present, the Hölder
    /// modulus on node pairs (and quadruples built from two sampled pairs).
    pub fn validate(&self, nodes: &[Point], opts: SampleOptions) -> Result<()> {
        if nodes.is_empty() {
            return Err(Error::EmptySample);
        }
        let pairs = sample_pairs(nodes.len(), opts);
        for &(i, j) in &pairs {
            let (x, y) = (&nodes[i], &nodes[j]);
            let a = self.eval(x, y);
            if !a.is_finite() || a < 0.0 || a > self.sup_norm {
                return Err(Error::CoefficientViolation(format!(
                    "a({x:?}, {y:?}) = {a} outside [0, {}]",
                    self.sup_norm
                )));
            }
            if a != self.eval(y, x) {
                return Err(Error::CoefficientViolation(format!("asymmetric at ({x:?}, {y:?})")));
            }
        }
        if let Some(h) = self.holder {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
            let draws = opts.cap.min(pairs.len().saturating_mul(pairs.len())).min(200_000);
            for _ in 0..draws {
                let (i1, j1) = pairs[rng.gen_range(0..pairs.len())];
                let (i2, j2) = pairs[rng.gen_range(0..pairs.len())];
                let lhs = (self.eval(&nodes[i1], &nodes[j1]) - self.eval(&nodes[i2], &nodes[j2])).abs();
                let rhs = h.seminorm * (dist(&nodes[i1], &nodes[i2]) + dist(&nodes[j1], &nodes[j2])).powf(h.alpha);
                if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                    return Err(Error::CoefficientViolation(format!("hölder bound fails: |Δa| = {lhs} > {rhs}")));
                }
            }
        }
        Ok(())
    }
}

/// `(inf, sup)` of `a` over sampled pairs of `nodes` (typically the nodes of a
/// ball).
pub fn coefficient_extrema(a: &Coefficient, nodes: &[Point], opts: SampleOptions) -> Result<(f64, f64)> {
    if nodes.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, j) in sample_pairs(nodes.len(), opts) {
        let v = a.eval(&nodes[i], &nodes[j]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlReport {
    /// Largest `a(x,y) / (C|x-y|^{tq-sp} + a₂)` seen.
    pub max_ratio: f64,
    /// The constant `C = [a]^θ (2‖a‖∞)^{1-θ}`, `θ = (tq-sp)/α`.
    pub constant: f64,
    pub a2: f64,
    pub samples: usize,
}

/// Checks `a(x, y) <= C|x-y|^{tq-sp} + a₂` for `x` in `ball_nodes` and `y`
/// among `all_nodes`, with `a₂` the supremum of `a` over the ball.
pub fn coefficient_control_check(
    a: &Coefficient,
    cfg: &ExponentConfig,
    ball_nodes: &[Point],
    all_nodes: &[Point],
    opts: SampleOptions,
) -> Result<ControlReport> {
    let h = a.holder().ok_or(Error::MissingHolderData)?;
    let gap = cfg.tq() - cfg.sp();
    if gap < 0.0 || gap > h.alpha {
        return Err(Error::AssumptionViolated(format!("need 0 <= tq - sp <= alpha, got tq - sp = {gap}")));
    }
    let (_, a2) = coefficient_extrema(a, ball_nodes, opts)?;
    let theta = gap / h.alpha;
    let constant = h.seminorm.powf(theta) * (2.0 * a.sup_norm()).powf(1.0 - theta);
    let mut max_ratio: f64 = 0.0;
    let mut samples = 0;
    let total = ball_nodes.len().saturating_mul(all_nodes.len());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut visit = |x: &Point, y: &Point| {
        let lhs = a.eval(x, y);
        let rhs = constant * dist(x, y).powf(gap) + a2;
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_ratio = max_ratio.max(ratio);
        samples += 1;
    };
    if total <= opts.cap {
        for x in ball_nodes {
            for y in all_nodes {
                visit(x, y);
            }
        }
    } else {
        for _ in 0..opts.cap {
            let x = &ball_nodes[rng.gen_range(0..ball_nodes.len())];
            let y = &all_nodes[rng.gen_range(0..all_nodes.len())];
            visit(x, y);
        }
    }
    Ok(ControlReport { max_ratio, constant, a2, samples })
}

/// The kernels `K_sp` and `K_tq` with ellipticity constant `Λ`.
#[derive(Clone)]
pub struct KernelPair {
    k_sp: PairFn,
    k_tq: PairFn,
    lambda: f64,
    model: bool,
    exponents: (f64, f64),
}

impl fmt::Debug for KernelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelPair")
            .field("lambda", &self.lambda)
            .field("model", &self.model)
            .field("exponents", &self.exponents)
            .finish()
    }
}

impl KernelPair {
    /// `K_sp = |x-y|^{-(n+sp)}`, `K_tq = |x-y|^{-(n+tq)}`.
    pub fn model(cfg: &ExponentConfig) -> Self {
        let e_sp = cfg.dim() + cfg.sp();
        let e_tq = cfg.dim() + cfg.tq();
        Self {
            k_sp: Arc::new(move |x, y| dist(x, y).powf(-e_sp)),
            k_tq: Arc::new(move |x, y| dist(x, y).powf(-e_tq)),
            lambda: 1.0,
            model: true,
            exponents: (e_sp, e_tq),
        }
    }

    /// Model kernels multiplied by constant factors; `Λ` is the smallest value
    /// covering both factors.
    pub fn scaled_model(cfg: &ExponentConfig, factor_sp: f64, factor_tq: f64) -> Result<Self> {
        if !(factor_sp > 0.0 && factor_tq > 0.0 && factor_sp.is_finite() && factor_tq.is_finite()) {
            return Err(Error::InvalidParameter("kernel factors must be positive".into()));
        }
        let e_sp = cfg.dim() + cfg.sp();
        let e_tq = cfg.dim() + cfg.tq();
        let lambda = [factor_sp, 1.0 / factor_sp, factor_tq, 1.0 / factor_tq].into_iter().fold(1.0, f64::max);
        Ok(Self {
            k_sp: Arc::new(move |x, y| factor_sp * dist(x, y).powf(-e_sp)),
            k_tq: Arc::new(move |x, y| factor_tq * dist(x, y).powf(-e_tq)),
            lambda,
            model: false,
            exponents: (e_sp, e_tq),
        })
    }

    pub fn custom(
        cfg: &ExponentConfig,
        lambda: f64,
        k_sp: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
        k_tq: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be >= 1")));
        }
        Ok(Self {
            k_sp: Arc::new(k_sp),
            k_tq: Arc::new(k_tq),
            lambda,
            model: false,
            exponents: (cfg.dim() + cfg.sp(), cfg.dim() + cfg.tq()),
        })
    }

    #[inline]
    pub fn k_sp(&self, x: &Point, y: &Point) -> f64 {
        (self.k_sp)(x, y)
    }

    #[inline]
    pub fn k_tq(&self, x: &Point, y: &Point) -> f64 {
        (self.k_tq)(x, y)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_model(&self) -> bool {
        self.model
    }

    /// `(n + sp, n + tq)` as used by the envelope.
    pub fn exponents(&self) -> (f64, f64) {
        self.exponents
    }

    /// Samples the envelope `Λ^{-1}|x-y|^{-e} <= K <= Λ|x-y|^{-e}` and symmetry
    /// for both kernels on distinct node pairs.
    pub fn validate(&self, nodes: &[Point], opts: SampleOptions) -> Result<()> {
        let round = 1e-14;
        for (i, j) in sample_pairs(nodes.len(), opts) {
            if i == j {
                continue;
            }
            let (x, y) = (&nodes[i], &nodes[j]);
            let r = dist(x, y);
            for (name, k, e) in [("K_sp", &self.k_sp, self.exponents.0), ("K_tq", &self.k_tq, self.exponents.1)] {
                let v = k(x, y);
                let env = r.powf(-e);
                if !(v.is_finite() && v >= env / self.lambda * (1.0 - round) && v <= env * self.lambda * (1.0 + round))
                {
                    return Err(Error::KernelViolation(format!("{name}({x:?}, {y:?}) = {v} outside envelope")));
                }
                if v != k(y, x) {
                    return Err(Error::KernelViolation(format!("{name} asymmetric at ({x:?}, {y:?})")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, h: f64) -> Vec<Point> {
        (0..n).map(|i| [-1.0 + h * (i as f64 + 0.5), 0.0]).collect()
    }

    #[test]
    fn exponent_examples() {
        let c = ExponentConfig::new(1, 0.4, 0.5, 2.0, 2.0, None).unwrap();
        assert!((c.p_star_s - 10.0).abs() < 1e-12);
        assert!(matches!(ExponentConfig::new(1, 0.6, 0.5, 2.0, 2.0, None), Err(Error::OrderViolation(_))));
        let c = ExponentConfig::new(2, 0.5, 0.5, 4.0, 4.0, Some(5.0)).unwrap();
        assert_eq!(c.p_star_s, 5.0);
    }

    #[test]
    fn critical_case_defaults_to_q_plus_one() {
        let c = ExponentConfig::new(1, 0.5, 0.5, 2.0, 3.0, None).unwrap();
        assert_eq!(c.p_star_s, 4.0);
    }

    #[test]
    fn supercritical_needs_override() {
        assert!(matches!(ExponentConfig::new(1, 0.6, 0.7, 2.0, 2.0, None), Err(Error::ConjugateRequired { .. })));
        assert!(ExponentConfig::new(1, 0.6, 0.7, 2.0, 2.0, Some(8.0)).is_ok());
        assert!(ExponentConfig::new(1, 0.6, 0.7, 2.0, 2.0, Some(1.5)).is_err());
    }

    #[test]
    fn order_violations() {
        for (s, t, p, q) in [(0.0, 0.5, 2.0, 2.0), (0.5, 1.0, 2.0, 2.0), (0.3, 0.5, 1.0, 2.0), (0.3, 0.5, 3.0, 2.0)] {
            assert!(matches!(ExponentConfig::new(1, s, t, p, q, None), Err(Error::OrderViolation(_))));
        }
        assert!(ExponentConfig::new(3, 0.3, 0.5, 2.0, 2.0, None).is_err());
        assert!(ExponentConfig::new(1, f64::NAN, 0.5, 2.0, 2.0, None).is_err());
    }

    #[test]
    fn assumption_examples() {
        let c = ExponentConfig::new(1, 0.4, 0.4, 2.0, 3.0, None).unwrap();
        assert!(check_boundedness_assumption(&c));
        let c = ExponentConfig::new(1, 0.4, 0.4, 2.0, 11.0, None).unwrap();
        assert!(!check_boundedness_assumption(&c));
        let c = ExponentConfig::new(1, 0.6, 0.6, 2.0, 100.0, Some(101.0)).unwrap();
        assert!(check_boundedness_assumption(&c));

        let c = ExponentConfig::new(1, 0.5, 0.5, 2.0, 2.0, None).unwrap();
        assert!(check_holder_assumption(&c, 0.1));
        let c = ExponentConfig::new(1, 0.4, 0.6, 2.0, 3.0, None).unwrap();
        assert!(!check_holder_assumption(&c, 0.5));
    }

    #[test]
    fn extrema_and_control() {
        let nodes = line(40, 0.05);
        assert_eq!(coefficient_extrema(&Coefficient::zero(), &nodes, SampleOptions::default()).unwrap(), (0.0, 0.0));
        let c = Coefficient::constant(0.7).unwrap();
        assert_eq!(coefficient_extrema(&c, &nodes, SampleOptions::default()).unwrap(), (0.7, 0.7));
        assert!(matches!(coefficient_extrema(&c, &[], SampleOptions::default()), Err(Error::EmptySample)));

        let cfg = ExponentConfig::new(1, 0.4, 0.5, 2.0, 2.0, None).unwrap();
        let r = coefficient_control_check(&c, &cfg, &nodes[10..20], &nodes, SampleOptions::default()).unwrap();
        assert!(r.max_ratio <= 1.0);
        let no_holder = Coefficient::custom("x", 1.0, None, |_, _| 1.0).unwrap();
        assert!(matches!(
            coefficient_control_check(&no_holder, &cfg, &nodes, &nodes, SampleOptions::default()),
            Err(Error::MissingHolderData)
        ));
    }

    #[test]
    fn builtin_coefficients_validate() {
        let nodes: Vec<Point> =
            (0..15).flat_map(|i| (0..15).map(move |j| [-1.5 + 0.2 * i as f64, -1.5 + 0.2 * j as f64])).collect();
        let opts = SampleOptions { cap: 20_000, seed: 3 };
        Coefficient::cos_product().validate(&nodes, opts).unwrap();
        Coefficient::clipped_power(0.5).unwrap().validate(&nodes, opts).unwrap();
        Coefficient::constant(2.0).unwrap().validate(&nodes, opts).unwrap();
        let bad = Coefficient::custom("asym", 10.0, None, |x, y| (x[0] - 2.0 * y[0]).abs()).unwrap();
        assert!(bad.validate(&nodes, opts).is_err());
        let rough = Coefficient::custom("rough", 1.0, Some(HolderData { alpha: 1.0, seminorm: 0.01 }), |x, y| {
            (0.5 + 0.5 * (10.0 * (x[0] + y[0])).sin()).clamp(0.0, 1.0)
        })
        .unwrap();
        assert!(rough.validate(&nodes, opts).is_err());
    }

    #[test]
    fn model_kernels_sit_in_envelope() {
        let cfg = ExponentConfig::new(2, 0.3, 0.6, 2.0, 2.5, None).unwrap();
        let nodes: Vec<Point> = (0..10).flat_map(|i| (0..10).map(move |j| [0.1 * i as f64, 0.1 * j as f64])).collect();
        KernelPair::model(&cfg).validate(&nodes, SampleOptions::default()).unwrap();
        let k = KernelPair::scaled_model(&cfg, 2.0, 0.5).unwrap();
        assert_eq!(k.lambda(), 2.0);
        k.validate(&nodes, SampleOptions::default()).unwrap();
        let bad = KernelPair::custom(&cfg, 1.5, |_, _| 1.0, |_, _| 1.0).unwrap();
        assert!(bad.validate(&nodes, SampleOptions::default()).is_err());
    }

    #[test]
    fn sampling_caps() {
        assert_eq!(sample_pairs(10, SampleOptions::default()).len(), 100);
        let s = sample_pairs(5000, SampleOptions { cap: 1000, seed: 1 });
        assert_eq!(s.len(), 1000);
        assert_eq!(s, sample_pairs(5000, SampleOptions { cap: 1000, seed: 1 }));
    }
}
