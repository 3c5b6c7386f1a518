use std::sync::Arc;

use nldp_core::grid::{radial_tail_integral, Point};
use nldp_core::params::{check_boundedness_assumption, ExponentConfig};
use nldp_core::regularity::*;
use nldp_core::solver::{minimize, Initialization};
use nldp_core::{Coefficient, DiscreteFunction, EnergyContext, Grid, OmegaSpec, SolveOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORIGIN: Point = [0.0, 0.0];

fn ctx_on(grid: Arc<Grid>, s: f64, t: f64, p: f64, q: f64, a: Coefficient) -> EnergyContext {
    EnergyContext::model(grid, ExponentConfig::new(1, s, t, p, q, None).unwrap(), a).unwrap()
}

fn grid(h: f64) -> Arc<Grid> {
    Arc::new(Grid::build(1, 3.0, h, &OmegaSpec::interval(-1.5, 1.5)).unwrap())
}

fn random(grid: &Grid, seed: u64, lo: f64, hi: f64) -> DiscreteFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect();
    DiscreteFunction::new(grid, vals, Some(0.0)).unwrap()
}

#[test]
fn degiorgi_random_parameters_below_threshold_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let b1: f64 = rng.gen_range(0.1..10.0);
        let b2: f64 = rng.gen_range(1.1..4.0);
        let beta = rng.gen_range(0.2..2.0);
        let threshold = b1.powf(-1.0 / beta) * b2.powf(-1.0 / (beta * beta));
        let out = degiorgi_iteration(0.999 * threshold, b1, b2, beta, 500).unwrap();
        assert_eq!(out.threshold, threshold);
        assert!(out.converged, "b1 = {b1}, b2 = {b2}, beta = {beta}");
    }
}

#[test]
fn size_comparison_sweep() {
    // first inequality on a 10^4 point (a, b, p) grid
    let n = 22;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = 10.0 * i as f64 / (n - 1) as f64;
                let b = 10.0 * j as f64 / (n - 1) as f64;
                let p = 1.0 + 4.0 * k as f64 / (n - 1) as f64;
                for eps in [0.01, 0.1, 0.5, 1.0] {
                    let (first, second) = numeric_ineq_check(a, b, p, eps);
                    assert!(first && second, "a = {a}, b = {b}, p = {p}, eps = {eps}");
                }
            }
        }
    }
}

#[test]
fn size_comparison_constant_is_attained_at_unit_epsilon() {
    // at eps = 1 the ratio (a^p - 2b^p)/|a-b|^p peaks at a/b = 2^{1/(p-1)}
    let p: f64 = 3.0;
    let u = 2.0_f64.powf(1.0 / (p - 1.0));
    let (a, b): (f64, f64) = (u, 1.0);
    let c = size_comparison_constant(p);
    let lhs = a.powf(p) - b.powf(p);
    let rhs = b.powf(p) + c * (a - b).abs().powf(p);
    assert!(lhs <= rhs && lhs >= rhs * (1.0 - 1e-5));
}

#[test]
fn holder_constants_recomputed_independently() {
    let cfg = ExponentConfig::new(1, 0.5, 0.5, 2.0, 2.0, None).unwrap();
    let hc = holder_constants(&cfg, 1.0, 1.0, 0.1, 1.0, 1.0).unwrap();
    // sp = n: p* defaults to q + 1 = 3, the t-conjugate likewise, kappa = 3/2
    assert_eq!(hc.kappa, 1.5);
    assert_eq!(hc.m, 2.0);
    assert_eq!(hc.m_tilde, 2.0);
    // nu* = (M^{2κ})^{-1/(κ-1)} 2^{-(n+tq+2q)κ/(κ-1)²} = 2^{-6} 2^{-36}
    assert!((hc.ln_nu_star - (-42.0 * 2f64.ln())).abs() < 1e-12);
    let ln = |x: f64| x.ln();
    let sigma = [ln(0.25), ln(0.25), -4.0 * ln(6.0), -8.0 * 2f64.powi(42)];
    for (a, b) in hc.ln_sigma_candidates.iter().zip(sigma) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
    assert!((hc.ln_sigma - sigma[3]).abs() <= 1e-12 * sigma[3].abs());
    // ε = σ^{1/2}; the fourth γ bound is log_σ(1 - ε) ≈ ε/|ln σ|
    let abs_ln_sigma = -sigma[3];
    let gamma = [ln(2f64.ln()) - ln(abs_ln_sigma), ln(0.5), ln(0.5), 0.5 * sigma[3] - ln(abs_ln_sigma)];
    for (a, b) in hc.ln_gamma_candidates.iter().zip(gamma) {
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
    }
    assert_eq!(hc.ln_gamma, hc.ln_gamma_candidates[3]);
    assert!((hc.ln_epsilon - 0.5 * sigma[3]).abs() <= 1e-12 * sigma[3].abs());
    assert_eq!(hc.sigma, 0.0);
}

#[test]
fn holder_constants_with_moderate_sigma() {
    // with a large c0 the exponential bound is inactive and everything is
    // representable
    let cfg = ExponentConfig::new(1, 0.5, 0.5, 2.0, 2.0, None).unwrap();
    let hc = holder_constants(&cfg, 1.0, 0.0, 0.0, 1e-30, 1e-60).unwrap();
    assert!(hc.sigma > 0.0 && hc.sigma <= 0.25);
    assert!(hc.gamma > 0.0 && hc.gamma < 1.0);
    assert!(hc.epsilon > 0.0 && hc.epsilon < 1.0);
    let direct_gamma = [0.5f64.ln() / hc.sigma.ln(), 0.5, 0.5, (1.0 - hc.epsilon).ln() / hc.sigma.ln()]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    assert!((hc.gamma - direct_gamma).abs() <= 1e-12);
}

#[test]
fn oscillation_of_square_root_profile() {
    let g = Grid::build(1, 8.0, 0.004, &OmegaSpec::interval(-6.0, 6.0)).unwrap();
    let x0 = [0.002, 0.0];
    let u = DiscreteFunction::from_fn(&g, |x| (x[0] - x0[0]).abs().sqrt(), Some(0.0)).unwrap();
    let tr = oscillation_sequence(&g, &u, &x0, 4.0, 0.25, 20).unwrap();
    assert!((tr.gamma_fit - 0.5).abs() < 0.05, "{}", tr.gamma_fit);
    assert!(tr.omega.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn oscillation_in_two_dimensions() {
    let g = Grid::build(2, 2.0, 0.02, &OmegaSpec::Ball { center: [0.0, 0.0], radius: 1.5 }).unwrap();
    let u = DiscreteFunction::from_fn(&g, |x| 2.0 * x[0] - x[1], Some(0.0)).unwrap();
    let tr = oscillation_sequence(&g, &u, &[0.01, 0.01], 1.2, 0.25, 10).unwrap();
    assert!((tr.gamma_fit - 1.0).abs() < 0.1, "{}", tr.gamma_fit);
}

#[test]
fn k0_of_constant_uses_radial_tails() {
    let h = 0.01;
    let g = Arc::new(Grid::build(1, 19.0, h, &OmegaSpec::interval(-1.0, 1.0)).unwrap());
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::constant(1.0).unwrap());
    let c: f64 = 0.8;
    let u = DiscreteFunction::constant(&g, c);
    let r = 0.5;
    let k0 = k0_quantity(&ctx, &u, &ORIGIN, r).unwrap();
    let (sp, tq) = (0.6, 1.0);
    let t1 = (c.powf(1.0) + c.powf(1.5)) * radial_tail_integral(1, sp, r);
    let t2 = c.powf(1.5) * radial_tail_integral(1, tq, r);
    let exact = 2.0 * (c + (r.powf(sp) * t1).powf(1.0) + (r.powf(tq) * t2).powf(1.0 / 1.5));
    assert!((k0 - exact).abs() < 0.01 * exact, "{k0} vs {exact}");
}

#[test]
fn inclusion_on_random_function() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.6, 2.0, 3.0, Coefficient::zero());
    let set = g.interior_indices().to_vec();
    for seed in 0..5 {
        let v = random(&g, seed, -1.0, 1.0);
        let rep = inclusion_check(&ctx, &v, &set).unwrap();
        assert!(rep.within(1.05), "{rep:?}");
    }
}

#[test]
fn inclusion_with_equal_exponents_uses_diameter_only() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.6, 2.0, 2.0, Coefficient::zero());
    let set = g.interior_indices().to_vec();
    let v = random(&g, 3, -1.0, 1.0);
    let rep = inclusion_check(&ctx, &v, &set).unwrap();
    assert_eq!(rep.labels["constant"], "1.0000000000000000e0");
    assert!(rep.within(1.0));
    let same = ctx_on(g.clone(), 0.4, 0.4, 2.0, 3.0, Coefficient::zero());
    assert!(matches!(inclusion_check(&same, &v, &set), Err(nldp_core::Error::DegenerateOrder)));
}

#[test]
fn sobolev_poincare_is_two_homogeneous() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::zero());
    let v = DiscreteFunction::from_fn(&g, |x| (2.0 * x[0]).sin() + x[0] * x[0], Some(0.0)).unwrap();
    let a = sobolev_poincare_check(&ctx, &v, &ORIGIN, 1.0, PoincareVariant::SingleScale).unwrap();
    let b = sobolev_poincare_check(&ctx, &v.scaled(2.0), &ORIGIN, 1.0, PoincareVariant::SingleScale).unwrap();
    assert!((b.lhs / a.lhs - 4.0).abs() < 1e-12 && (b.rhs / a.rhs - 4.0).abs() < 1e-12);
    assert!((a.implied_constant - b.implied_constant).abs() <= 1e-12 * a.implied_constant);
}

#[test]
fn sobolev_poincare_constant_is_stable_across_scales() {
    let g = Arc::new(Grid::build(1, 3.0, 0.005, &OmegaSpec::interval(-1.5, 1.5)).unwrap());
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::zero());
    let v = DiscreteFunction::from_fn(&g, |x| (1.0 + x[0]).powi(2), Some(0.0)).unwrap();
    let cs: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&r| sobolev_poincare_check(&ctx, &v, &ORIGIN, r, PoincareVariant::SingleScale).unwrap().implied_constant)
        .collect();
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), &c| (l.min(c), h.max(c)));
    assert!(hi <= 2.0 * lo, "{cs:?}");
}

#[test]
fn ineq1_half_support_factors() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::zero());
    assert!(check_boundedness_assumption(ctx.cfg()));
    let f = DiscreteFunction::from_fn(&g, |x| if x[0] > 0.0 { 1.0 + x[0] } else { 0.0 }, Some(0.0)).unwrap();
    let rep = ineq1_check(&ctx, &f, &ORIGIN, 1.0, 1.0).unwrap();
    let frac: f64 = rep.labels["support_fraction"].parse().unwrap();
    assert_eq!(frac, 0.5);
    let lhs = rep.lhs;
    let mean_term: f64 = rep.labels["mean_term"].parse().unwrap();
    assert!((mean_term - 0.5f64.powf(1.0) * lhs).abs() <= 1e-15 * lhs);
    let support: f64 = rep.labels["support_term"].parse().unwrap();
    let seminorm: f64 = rep.labels["seminorm_term"].parse().unwrap();
    assert!((rep.rhs - (support + seminorm + mean_term)).abs() <= 1e-12 * rep.rhs);
}

#[test]
fn ineq1_rejects_supercritical_q() {
    let g = grid(0.05);
    // sp = 0.6 < 1, np/(n-sp) = 5 < q
    let ctx = ctx_on(g.clone(), 0.3, 0.3, 2.0, 6.0, Coefficient::zero());
    let f = random(&g, 1, -1.0, 1.0);
    assert!(matches!(ineq1_check(&ctx, &f, &ORIGIN, 1.0, 1.0), Err(nldp_core::Error::AssumptionViolated(_))));
}

#[test]
fn ineq2_with_constant_coefficient() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::constant(0.7).unwrap());
    let f = random(&g, 8, -1.0, 1.0);
    let rep = ineq2_check(&ctx, &f, &ORIGIN, 0.75, 1.0).unwrap();
    assert_eq!(rep.labels["a1"], rep.labels["a2"]);
    // recompute both sides with a₁ = a₂ = 0.7
    let kappa = ctx.cfg().kappa.unwrap();
    let ball = g.ball_nodes(&ORIGIN, 0.75);
    let r: f64 = 0.75;
    let dens = |v: f64| (v / r.powf(0.3)).abs().powi(2) + 0.7 * (v / r.powf(0.4)).abs().powf(2.5);
    let lhs = (ball.iter().map(|&i| dens(f.get(i)).powf(kappa)).sum::<f64>() / ball.len() as f64).powf(1.0 / kappa);
    assert!((lhs - rep.lhs).abs() <= 1e-12 * lhs);
    assert!(rep.within(1.05), "{rep:?}");
}

#[test]
fn ineq2_radius_constraints() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::cos_product());
    let f = random(&g, 8, -1.0, 1.0);
    assert!(matches!(ineq2_check(&ctx, &f, &ORIGIN, 0.4, 1.0), Err(nldp_core::Error::RadiiOutOfRange(_))));
    assert!(matches!(ineq2_check(&ctx, &f, &ORIGIN, 1.1, 1.2), Err(nldp_core::Error::RadiiOutOfRange(_))));
}

#[test]
fn log_excess_is_bounded_by_twice_log_xi() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::cos_product());
    let gate = SupersolutionGate::new(1e-9);
    for seed in 0..5 {
        let u = random(&g, seed, 0.0, 2.0);
        for xi in [1.5, 4.0, 50.0] {
            let rep = log_excess_check(&ctx, &u, &ORIGIN, 1.0, 0.5, 0.1, 1.0, xi, &gate).unwrap();
            assert!(rep.lhs <= 2.0 * f64::ln(xi));
        }
    }
}

#[test]
fn log_estimate_rejects_negative_values_in_ball() {
    let g = grid(0.05);
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::cos_product());
    let u = DiscreteFunction::from_fn(&g, |x| x[0], Some(0.0)).unwrap();
    let gate = SupersolutionGate::new(1e-9);
    assert!(matches!(
        log_estimate_check(&ctx, &u, &ORIGIN, 1.0, 0.25, 0.1, &gate),
        Err(nldp_core::Error::NegativeInBall(_))
    ));
}

#[test]
fn caccioppoli_on_solved_problem_is_resolution_stable() {
    let mut constants = Vec::new();
    for h in [0.05, 0.025] {
        let g = Arc::new(Grid::build(1, 4.0, h, &OmegaSpec::interval(-1.0, 1.0)).unwrap());
        let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.4, Coefficient::cos_product());
        let datum = DiscreteFunction::from_fn(&g, |x| (1.0 - (x[0] - 1.0).abs()).max(0.0), Some(0.0)).unwrap();
        let opts = SolveOptions { init: Initialization::Default, ..Default::default() };
        let (u, rep) = minimize(&ctx, &datum, &opts).unwrap();
        assert!(rep.converged);
        let x0 = [0.0, 0.0];
        let ball: Vec<f64> = g.ball_nodes(&x0, 0.45).iter().map(|&i| u.get(i)).collect();
        let mut sorted = ball.clone();
        sorted.sort_by(f64::total_cmp);
        let k = sorted[sorted.len() / 2];
        let phi = standard_cutoff(&g, &x0, 0.45);
        let rep = caccioppoli_check(&ctx, &u, &x0, 0.45, k, Sign::Plus, &phi, rep.grad_tol).unwrap();
        assert!(!rep.advisory);
        assert!(rep.implied_constant.is_finite() && rep.implied_constant > 0.0);
        constants.push(rep.implied_constant);
    }
    let ratio = constants[0] / constants[1];
    assert!((0.5..=2.0).contains(&ratio), "{constants:?}");
}

#[test]
fn levelset_vanishes_beyond_supremum() {
    let g = Arc::new(Grid::build(1, 4.0, 0.05, &OmegaSpec::interval(-1.0, 1.0)).unwrap());
    let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.4, Coefficient::cos_product());
    let datum = DiscreteFunction::from_fn(&g, |x| (1.0 - (x[0] - 1.0).abs()).max(0.0), Some(0.0)).unwrap();
    let (u, _) = minimize(&ctx, &datum, &SolveOptions::default()).unwrap();
    let sup = g.interior_indices().iter().fold(0.0_f64, |m, &i| m.max(u.get(i).abs()));
    let k0 = 0.6 * sup;
    let ys = levelset_sequence(&ctx, &u, &ORIGIN, 0.9, k0, 12).unwrap();
    assert!(ys.windows(2).all(|w| w[1] <= w[0]));
    for (i, y) in ys.iter().enumerate() {
        let level = 2.0 * k0 * (1.0 - 0.5f64.powi(i as i32 + 1));
        if level > sup {
            assert_eq!(*y, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degiorgi_converges_below_threshold(
        b1 in 0.05..20.0f64, b2 in 1.01..6.0f64, beta in 0.1..3.0f64, frac in 0.0..0.999f64,
    ) {
        let threshold = b1.powf(-1.0 / beta) * b2.powf(-1.0 / (beta * beta));
        let out = degiorgi_iteration(frac * threshold, b1, b2, beta, 2000).unwrap();
        prop_assert!(out.converged);
    }

    #[test]
    fn levelsets_are_nonincreasing(seed in 0u64..10_000, k0 in 0.01..1.0f64) {
        let g = grid(0.1);
        let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::cos_product());
        let u = random(&g, seed, -1.0, 2.0);
        let ys = levelset_sequence(&ctx, &u, &ORIGIN, 1.2, k0, 10).unwrap();
        prop_assert!(ys.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn oscillations_are_nested(seed in 0u64..10_000) {
        let g = Grid::build(1, 8.0, 0.01, &OmegaSpec::interval(-6.0, 6.0)).unwrap();
        let u = random(&g, seed, -1.0, 1.0);
        let tr = oscillation_sequence_with(&g, &u, &[0.003, 0.0], 5.0, 0.25, 10, 2);
        if let Ok(tr) = tr {
            prop_assert!(tr.omega.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn k0_grows_with_scaling(seed in 0u64..10_000, l1 in 0.1..3.0f64, l2 in 0.1..3.0f64) {
        let g = grid(0.1);
        let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::cos_product());
        let u = random(&g, seed, -1.0, 1.0);
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        let a = k0_quantity(&ctx, &u.scaled(lo), &ORIGIN, 1.0).unwrap();
        let b = k0_quantity(&ctx, &u.scaled(hi), &ORIGIN, 1.0).unwrap();
        prop_assert!(a <= b);
    }

    #[test]
    fn tails_grow_with_exterior_values(seed in 0u64..10_000, bump in 0.0..2.0f64) {
        let g = grid(0.1);
        let ctx = ctx_on(g.clone(), 0.3, 0.4, 2.0, 2.5, Coefficient::cos_product());
        let noise = random(&g, seed, 0.0, 1.0);
        let r = 1.0;
        let outside: Vec<bool> = g.nodes().iter().map(|x| x[0].abs() >= r).collect();
        let build = |extra: f64| {
            let vals = (0..g.len())
                .map(|i| if outside[i] { -(noise.get(i) + extra) } else { 0.5 + noise.get(i) })
                .collect();
            DiscreteFunction::new(&g, vals, Some(0.0)).unwrap()
        };
        let (u, v) = (build(0.0), build(bump));
        prop_assert!(k0_quantity(&ctx, &u, &ORIGIN, r).unwrap() <= k0_quantity(&ctx, &v, &ORIGIN, r).unwrap());
        let gate = SupersolutionGate::new(f64::INFINITY);
        let a = log_estimate_check(&ctx, &u, &ORIGIN, r, 0.5, 0.1, &gate).unwrap();
        let b = log_estimate_check(&ctx, &v, &ORIGIN, r, 0.5, 0.1, &gate).unwrap();
        prop_assert!(a.rhs <= b.rhs);
        prop_assert_eq!(a.lhs, b.lhs);
    }

    #[test]
    fn first_size_inequality_holds(a in 0.0..10.0f64, b in 0.0..10.0f64, p in 1.0..5.0f64, eps in 0.01..1.0f64) {
        let (first, second) = numeric_ineq_check(a, b, p, eps);
        prop_assert!(first);
        prop_assert!(second);
    }
}
