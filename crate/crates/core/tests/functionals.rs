use gkdv_core::functionals::{
    abel_combination, bilinear_form, constrained_spectrum, dj_sums, energy_expansion_residual, localized_masses,
    psi_eval, quadratic_form, unconstrained_spectrum, PsiWeight, SpectralCertificate,
};
use gkdv_core::modulation::{decompose, DecomposeOptions};
use gkdv_core::profiles::{sample_soliton, soliton_mass, soliton_sum};
use gkdv_core::solver::{evolve, h1_norm, EvolveOptions};
use gkdv_core::{Field, Grid, ModelParams, SolitonState};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(v: u32) -> ModelParams {
    ModelParams::new(v).unwrap()
}

fn smooth_random(grid: &Grid, seed: u64, center: f64, width: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> =
        (1..=12).map(|k| (k as f64 * 0.15, rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU))).collect();
    Field::from_fn(*grid, |x| {
        let env = (-(grid.wrap(x - center) / width).powi(2)).exp();
        env * modes.iter().map(|(k, a, ph)| a * (k * x + ph).sin()).sum::<f64>()
    })
    .unwrap()
}

#[test]
fn psi_limits_and_bounds_on_a_grid() {
    let g = Grid::new(512.0, 4096).unwrap();
    for pv in 2..=4 {
        let w = PsiWeight::new(0.5, p(pv)).unwrap();
        assert!((psi_eval(&w, g.x(g.n_points() - 1), 0).unwrap() - 1.0).abs() < 1e-10);
        assert!(psi_eval(&w, g.x(0), 0).unwrap().abs() < 1e-10);
        let mut prev = -1.0;
        for i in 0..g.n_points() {
            let x = g.x(i);
            let v = psi_eval(&w, x, 0).unwrap();
            let d1 = psi_eval(&w, x, 1).unwrap();
            let d3 = psi_eval(&w, x, 3).unwrap();
            assert!(v >= prev, "p={pv} x={x}");
            assert!(d1 > 0.0);
            assert!(d3 - 0.125 * d1 <= 0.0, "p={pv} x={x}");
            if x.abs() < 100.0 {
                assert!(v > 0.0 && v < 1.0);
            }
            prev = v;
        }
    }
}

#[test]
fn right_soliton_mass_is_localized() {
    let g = Grid::new(256.0, 4096).unwrap();
    for pv in 2..=4 {
        let s = SolitonState::new(vec![1.0, 2.0], vec![-40.0, 40.0]).unwrap();
        let u = soliton_sum(p(pv), &s, &g).unwrap();
        let w = PsiWeight::new(s.sigma0(), p(pv)).unwrap();
        let rec = localized_masses(&u, &s, &w, 10.0, 1, 0.0).unwrap();
        assert_eq!(rec.midpoints, vec![0.0]);
        // 1 - psi(x) ~ (A / int Q) exp(-sqrt(sigma0) x / 2); both solitons sit 40 from the midpoint.
        let total = u.inner(&u);
        let prefactor = p(pv).tail_prefactor() / p(pv).constants().integral;
        let leak = total * prefactor * (-(s.sigma0().sqrt()) * 40.0 / 2.0).exp();
        let mass = soliton_mass(pv, 2.0).unwrap();
        assert!((rec.i[0] - mass).abs() <= leak, "p={pv}: {} vs {mass}", rec.i[0]);
        for v in [rec.i[0], rec.j_left, rec.j_right] {
            assert!((0.0..=total).contains(&v));
        }
    }
}

#[test]
fn functionals_are_translation_covariant() {
    let g = Grid::new(256.0, 2048).unwrap();
    let s = SolitonState::new(vec![1.0, 2.0, 3.0], vec![-50.0, 0.0, 50.0]).unwrap();
    let w = PsiWeight::new(s.sigma0(), p(3)).unwrap();
    let u = soliton_sum(p(3), &s, &g).unwrap().add(&smooth_random(&g, 3, 10.0, 8.0).scale(0.05).unwrap()).unwrap();
    let base = localized_masses(&u, &s, &w, 7.0, 1, 0.0).unwrap();
    for cells in [-37isize, 5, 120] {
        let shifted = u.roll(cells);
        let dx = cells as f64 * g.spacing();
        let rec = localized_masses(&shifted, &s.translated(dx), &w, 7.0, 1, 0.0).unwrap();
        for (a, b) in rec.i.iter().zip(&base.i) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((rec.j_left - base.j_left).abs() < 1e-12);
        assert!((rec.j_right - base.j_right).abs() < 1e-12);
    }
}

#[test]
fn abel_identity() {
    let pr = p(3);
    let s0 = SolitonState::new(vec![0.7, 1.5, 2.4], vec![-40.0, 0.0, 40.0]).unwrap();
    let s1 = SolitonState::new(vec![0.71, 1.48, 2.43], vec![-30.0, 15.0, 62.0]).unwrap();
    let lhs = abel_combination(&s1, &s0, pr).unwrap();
    let e = pr.mass_exponent();
    let rhs: f64 = (0..3).map(|j| s0.speeds()[j] * (s1.speeds()[j].powf(e) - s0.speeds()[j].powf(e))).sum();
    assert!((lhs - rhs).abs() < 1e-14);
    let d = dj_sums(&s1, pr);
    assert!((d[2] - 2.43f64.powf(e)).abs() < 1e-15);
}

#[test]
fn dj_differences_control_speed_changes() {
    let pr = p(2);
    let s0 = SolitonState::new(vec![1.0, 2.0, 3.0], vec![0.0, 30.0, 60.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let c: Vec<f64> = s0.speeds().iter().map(|c| c + rng.random_range(-0.05..0.05)).collect();
        let s1 = SolitonState::new(c, s0.positions().to_vec()).unwrap();
        let (d0, d1) = (dj_sums(&s0, pr), dj_sums(&s1, pr));
        let dsum: f64 = d0.iter().zip(&d1).map(|(a, b)| (a - b).abs()).sum();
        let csum: f64 = s0.speeds().iter().zip(s1.speeds()).map(|(a, b)| (a - b).abs()).sum();
        // c^{3/2} has derivative at least 3/2 * sqrt(0.95), so |c - c'| <= 2 |d_j - d_{j+1}| changes
        assert!(csum <= 2.0 * dsum, "{csum} vs {dsum}");
    }
}

#[test]
fn translation_kernel_annihilates_the_form() {
    let g = Grid::new(128.0, 2048).unwrap();
    for pv in 2..=4 {
        let s = SolitonState::new(vec![1.3], vec![4.0]).unwrap();
        let w = PsiWeight::new(s.sigma0(), p(pv)).unwrap();
        let rx = Field::new(g, sample_soliton(p(pv), 1.3, 4.0, &g, 1)).unwrap();
        let q = quadratic_form(&rx, &s, &w, p(pv)).unwrap();
        assert!(q.abs() < 1e-9, "p={pv}: {q}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bilinear_form_is_symmetric(seed in 0u64..1_000_000) {
        let g = Grid::new(256.0, 1024).unwrap();
        let s = SolitonState::new(vec![1.0, 2.0], vec![-30.0, 30.0]).unwrap();
        let w = PsiWeight::new(s.sigma0(), p(2)).unwrap();
        let f = smooth_random(&g, seed, -20.0, 15.0);
        let h = smooth_random(&g, seed + 1, 20.0, 15.0);
        let a = bilinear_form(&f, &h, &s, &w, p(2)).unwrap();
        let b = bilinear_form(&h, &f, &s, &w, p(2)).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
    }
}

#[test]
fn single_soliton_spectrum_has_negative_direction_and_kernel() {
    let g = Grid::new(256.0, 2048).unwrap();
    let s = SolitonState::new(vec![1.0], vec![0.0]).unwrap();
    let w = PsiWeight::new(s.sigma0(), p(2)).unwrap();
    let spec = unconstrained_spectrum(&s, &w, p(2), &g).unwrap();
    assert!(spec.lambda_min < 0.0);
    let kernel = spec.smallest.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    assert!(kernel < 1e-8, "{:?}", spec.smallest);
    // The negative direction is even: orthogonal to Q_x, not to Q.
    let q = Field::new(g, sample_soliton(p(2), 1.0, 0.0, &g, 0)).unwrap();
    assert!(spec.eigenvector.inner(&q).abs() > 0.1);
}

#[test]
fn constraints_restore_positivity_and_bound_the_form() {
    let g = Grid::new(256.0, 1024).unwrap();
    let s = SolitonState::new(vec![1.0, 2.0], vec![-20.0, 20.0]).unwrap();
    let pr = p(2);
    let w = PsiWeight::new(s.sigma0(), pr).unwrap();
    let spec = constrained_spectrum(&s, &w, pr, &g).unwrap();
    assert!(spec.lambda_min > 0.0, "{}", spec.lambda_min);
    let cert = SpectralCertificate::new(pr, &s, g, &spec);
    assert!(cert.certifies());
    assert_eq!(cert.separations, vec![40.0]);

    // Minimizer satisfies the constraints.
    for (&c, &x0) in s.speeds().iter().zip(s.positions()) {
        for order in 0..2 {
            let f = Field::new(g, sample_soliton(pr, c, x0, &g, order)).unwrap();
            assert!(spec.eigenvector.inner(&f).abs() < 1e-10);
        }
    }
    let q = quadratic_form(&spec.eigenvector, &s, &w, pr).unwrap();
    assert!((q - spec.lambda_min).abs() < 1e-9);

    // Random battery projected on the constraints.
    let u = soliton_sum(pr, &s, &g).unwrap();
    for seed in 0..20 {
        let pert = smooth_random(&g, seed, -10.0 + seed as f64, 20.0).scale(1e-3).unwrap();
        let dec = decompose(&u.add(&pert).unwrap(), &s, pr, &DecomposeOptions::default()).unwrap();
        // eps is orthogonal to the decomposition's own R_j; measure against that state
        let spec_d = constrained_spectrum(&dec.state, &w, pr, &g).unwrap();
        let form = quadratic_form(&dec.epsilon, &dec.state, &w, pr).unwrap();
        let h1 = h1_norm(&dec.epsilon);
        assert!(form >= spec_d.lambda_min * h1 * h1 - 1e-9, "seed {seed}");
        if seed >= 2 {
            break;
        }
    }
}

#[test]
fn energy_expansion_is_quadratic_in_the_perturbation() {
    let g = Grid::new(256.0, 2048).unwrap();
    let pr = p(2);
    let s = SolitonState::new(vec![1.0, 2.0], vec![-30.0, 30.0]).unwrap();
    let u0 = soliton_sum(pr, &s, &g).unwrap();
    let bump = smooth_random(&g, 5, -28.0, 5.0);
    let bump = bump.scale(1.0 / h1_norm(&bump)).unwrap();
    let mut pts = Vec::new();
    for alpha in [1e-3, 1e-2] {
        let u = u0.add(&bump.scale(alpha).unwrap()).unwrap();
        let opts = DecomposeOptions::default();
        let dec0 = decompose(&u, &s, pr, &opts).unwrap();
        let traj = evolve(&u, 2.0, pr, &EvolveOptions::new(2.5e-4, 2.0)).unwrap();
        let ut = &traj.last().field;
        let dec = decompose(ut, &dec0.state.advanced(2.0, 0.0), pr, &opts).unwrap();
        let e = energy_expansion_residual(ut, &dec.state, &dec.epsilon, &dec0.state, pr).unwrap();
        pts.push((alpha, e.lhs.abs()));
    }
    let slope = (pts[1].1 / pts[0].1).ln() / (pts[1].0 / pts[0].0).ln();
    assert!(slope >= 1.8, "slope {slope}, points {pts:?}");
}
