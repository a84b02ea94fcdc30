use gkdv_core::profiles::{kdv_nsoliton_centers, kdv_nsoliton_profile, soliton_sum};
use gkdv_core::solver::{h1_norm, Spectral};
use gkdv_core::{Field, Grid, LabError, ModelParams, SolitonState};

fn p2() -> ModelParams {
    ModelParams::new(2).unwrap()
}

#[test]
fn one_soliton_reduction_is_exact() {
    let g = Grid::new(256.0, 4096).unwrap();
    for &(c, y, t) in &[(1.0, 0.0, 0.0), (2.5, -10.0, 3.0), (0.6, 7.0, -4.0)] {
        let u = kdv_nsoliton_profile(p2(), &[c], &[y], t, &g).unwrap();
        for (i, v) in u.values().iter().enumerate() {
            let exact = p2().qc(c, g.x(i) - c * t - y, 0);
            assert!((v - exact).abs() < 1e-12, "c={c} x={}: {v} vs {exact}", g.x(i));
        }
    }
}

#[test]
fn rejects_other_exponents_and_equal_speeds() {
    let g = Grid::new(256.0, 1024).unwrap();
    let p3 = ModelParams::new(3).unwrap();
    assert!(matches!(
        kdv_nsoliton_profile(p3, &[1.0], &[0.0], 0.0, &g),
        Err(LabError::UnsupportedModel(_))
    ));
    assert!(matches!(
        kdv_nsoliton_profile(p2(), &[1.0, 1.0], &[0.0, 20.0], 0.0, &g),
        Err(LabError::Parameter(_))
    ));
}

#[test]
fn separated_two_soliton_matches_soliton_sum() {
    // Before the collision the faster soliton sits on the left and both
    // solitons are exactly at their phases.
    let g = Grid::new(256.0, 4096).unwrap();
    for &sep in &[40.0, 60.0] {
        let u = kdv_nsoliton_profile(p2(), &[1.0, 4.0], &[sep / 2.0, -sep / 2.0], 0.0, &g).unwrap();
        let s = SolitonState::new(vec![1.0, 4.0], vec![sep / 2.0, -sep / 2.0]).unwrap();
        let sum = soliton_sum(p2(), &s, &g).unwrap();
        let d = h1_norm(&u.sub(&sum).unwrap());
        assert!(d <= 1e-6, "separation {sep}: H1 distance {d}");
    }
}

#[test]
fn post_collision_centers_carry_the_phase_shift() {
    let g = Grid::new(256.0, 4096).unwrap();
    let (speeds, phases) = ([1.0, 4.0], [-20.0, -60.0]);
    let t = 30.0;
    let centers = kdv_nsoliton_centers(&speeds, &phases, t).unwrap();
    // Faster soliton pushed forward, slower one pulled back.
    assert!(centers[1] > phases[1] + 4.0 * t);
    assert!(centers[0] < phases[0] + t);
    let u = kdv_nsoliton_profile(p2(), &speeds, &phases, t, &g).unwrap();
    let s = SolitonState::new(speeds.to_vec(), centers).unwrap();
    let sum = soliton_sum(p2(), &s, &g).unwrap();
    assert!(h1_norm(&u.sub(&sum).unwrap()) < 1e-6);
}

fn pde_residual(speeds: &[f64], phases: &[f64], t: f64, g: &Grid, dt: f64) -> f64 {
    let at = |s: f64| kdv_nsoliton_profile(p2(), speeds, phases, t + s * dt, g).unwrap();
    let (m2, m1, p1, p2v) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
    let u = at(0.0);
    let spec = Spectral::for_grid(g);
    let uxxx = spec.derivative(u.values(), 3);
    let sq: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let flux = spec.derivative(&sq, 1);
    let r: Vec<f64> = (0..g.n_points())
        .map(|i| {
            // fourth-order centered difference in time
            let ut = (-p2v.values()[i] + 8.0 * p1.values()[i] - 8.0 * m1.values()[i] + m2.values()[i])
                / (12.0 * dt);
            ut + uxxx[i] + flux[i]
        })
        .collect();
    Field::new(*g, r).unwrap().l2_norm()
}

#[test]
fn two_soliton_satisfies_the_equation() {
    let g = Grid::new(256.0, 4096).unwrap();
    for &t in &[0.0, 10.0, 13.3, 20.0] {
        let res = pde_residual(&[1.0, 4.0], &[-20.0, -60.0], t, &g, 1e-4);
        assert!(res <= 1e-6, "t={t}: residual {res}");
    }
}

#[test]
fn three_soliton_satisfies_the_equation() {
    let g = Grid::new(256.0, 4096).unwrap();
    let res = pde_residual(&[0.5, 1.5, 3.0], &[0.0, -25.0, -50.0], 14.0, &g, 1e-4);
    assert!(res <= 1e-6, "residual {res}");
}
