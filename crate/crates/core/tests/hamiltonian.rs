use std::f64::consts::PI;

use octokdv::flows::{evolve, FlowKind, FlowSpec};
use octokdv::grid::{AlgebraField, Grid};
use octokdv::hamiltonian::{
    eval_density, euler_lagrange_residual, hamiltonian_value, prepotential, variational_derivative, Density,
};
use octokdv::initial::random_smooth;
use octokdv::symmetry::{apply_automorphism, basis_automorphism};

fn field(n: usize, seed: u64) -> AlgebraField {
    random_smooth(&Grid::new(n, 2.0 * PI * 3.0).unwrap(), seed, 4, 0.5)
}

/// Keep the real part and the e1 component only.
fn complex_sector(mut f: AlgebraField) -> AlgebraField {
    for m in 2..8 {
        f.component_mut(m).iter_mut().for_each(|v| *v = 0.0);
    }
    f
}

/// Node-perturbation gradient of the discretized functional, divided by
/// the quadrature weight.
fn fd_gradient(d: &Density, u: &AlgebraField) -> AlgebraField {
    let h = 1e-5;
    let mut g = AlgebraField::zeros(u.grid(), 3);
    for m in 0..8 {
        for k in 0..u.n() {
            let mut up = u.clone();
            up.component_mut(m)[k] += h;
            let mut dn = u.clone();
            dn.component_mut(m)[k] -= h;
            let diff = hamiltonian_value(d, &up).unwrap() - hamiltonian_value(d, &dn).unwrap();
            g.component_mut(m)[k] = diff / (2.0 * h * u.grid().dx());
        }
    }
    g
}

#[test]
fn euler_operator_matches_finite_difference_gradient() {
    let u = field(32, 1);
    for d in [Density::H1, Density::HM, Density::H2] {
        let exact = variational_derivative(&d, &u).unwrap();
        let fd = fd_gradient(&d, &u);
        let rel = exact.max_abs_diff(&fd).unwrap() / exact.max_abs();
        assert!(rel < 1e-6, "{d:?}: relative error {rel:e}");
    }
}

#[test]
fn h1_gradient_has_the_component_form() {
    let u = field(64, 2);
    let g = variational_derivative(&Density::H1, &u).unwrap();
    let uxx = u.spectral_diff(2);
    for k in 0..u.n() {
        let u0 = u.component(0)[k];
        let b2: f64 = (1..8).map(|i| u.component(i)[k].powi(2)).sum();
        assert!((g.component(0)[k] - (0.5 * u0 * u0 + uxx.component(0)[k] - 0.5 * b2)).abs() < 1e-12);
        for i in 1..8 {
            // -u0 u_i - u_ixx: the second derivative enters with a minus sign
            let want = -u0 * u.component(i)[k] - uxx.component(i)[k];
            assert!((g.component(i)[k] - want).abs() < 1e-12);
        }
    }
}

/// Subtract the spatial mean of every component.
fn demean(mut f: AlgebraField) -> AlgebraField {
    for m in 0..8 {
        let c = f.component_mut(m);
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        c.iter_mut().for_each(|v| *v -= mean);
    }
    f
}

/// Space-time samples of the prepotential along a flow.
fn prepotential_samples(spec: &FlowSpec, r0: &AlgebraField) -> Vec<AlgebraField> {
    let traj = evolve(spec, r0).unwrap();
    // the symmetrized cubic is not a total derivative for octonions, so the
    // imaginary means drift at O(dt); drop them before integrating
    traj.snapshots.iter().map(|s| prepotential(&demean(s.field.clone())).unwrap()).collect()
}

fn sampled(kind: FlowKind, r0: &AlgebraField, epsilon: f64) -> (Vec<AlgebraField>, f64) {
    let dt = 1e-3;
    let spec = FlowSpec::new(kind, r0.grid(), dt, 4.0 * dt).with_epsilon(epsilon).with_snapshot_every(1);
    (prepotential_samples(&spec, r0), dt)
}

#[test]
fn zero_trajectory_has_zero_residual() {
    let g = Grid::new(16, 10.0).unwrap();
    let samples = vec![AlgebraField::zeros(&g, 3); 5];
    assert!(euler_lagrange_residual(&Density::LagrangianKdv, &samples, 0.1).unwrap() < 1e-15);
}

#[test]
fn kdv_trajectory_solves_kdv_lagrangian_only() {
    let r0 = field(64, 3);
    let (s, dt) = sampled(FlowKind::Kdv, &r0, 0.0);
    let good = euler_lagrange_residual(&Density::LagrangianKdv, &s, dt).unwrap();
    let wrong = euler_lagrange_residual(&Density::LagrangianMiura, &s, dt).unwrap();
    assert!(good < 1e-4, "{good:e}");
    assert!(wrong > 1e-2, "negative control too small: {wrong:e}");
}

#[test]
fn gardner_trajectory_solves_master_lagrangian_in_complex_sector() {
    let r0 = complex_sector(field(64, 4));
    let (s, dt) = sampled(FlowKind::Gardner, &r0, 0.5);
    let res = euler_lagrange_residual(&Density::LagrangianEps { epsilon: 0.5 }, &s, dt).unwrap();
    assert!(res < 1e-4, "{res:e}");
}

#[test]
fn gardner_equation_differs_from_master_lagrangian_on_octonionic_data() {
    // the variation of the quartic term gives (r^3)_x / 18, the Gardner
    // equation carries (r^2 r_x + r_x r^2) / 12; they differ once r and r_x
    // stop commuting
    let eps = 0.5;
    let r0 = field(64, 5);
    let (s, dt) = sampled(FlowKind::Gardner, &r0, eps);
    let generic = euler_lagrange_residual(&Density::LagrangianEps { epsilon: eps }, &s, dt).unwrap();
    let (sc, _) = sampled(FlowKind::Gardner, &complex_sector(r0), eps);
    let complex = euler_lagrange_residual(&Density::LagrangianEps { epsilon: eps }, &sc, dt).unwrap();
    assert!(generic > 100.0 * complex, "generic {generic:e} vs complex {complex:e}");
}

#[test]
fn cubic_miura_flow_solves_miura_lagrangian() {
    // the cubic Miura flow is variational even off the complex sector
    let r0 = field(64, 6);
    let (s, dt) = sampled(FlowKind::Miura, &r0, 0.0);
    let res = euler_lagrange_residual(&Density::LagrangianMiura, &s, dt).unwrap();
    assert!(res < 1e-4, "{res:e}");
}

#[test]
fn euler_lagrange_rejects_bad_input() {
    let s = vec![field(16, 1); 4];
    assert!(euler_lagrange_residual(&Density::LagrangianKdv, &s, 0.1).is_err());
    let s = vec![field(16, 1); 5];
    assert!(euler_lagrange_residual(&Density::H1, &s, 0.1).is_err());
    let mut mixed = vec![field(16, 1); 5];
    mixed[2] = field(32, 1);
    assert!(euler_lagrange_residual(&Density::LagrangianKdv, &mixed, 0.1).is_err());
}

#[test]
fn densities_are_g2_invariant() {
    let s = field(64, 7);
    let st = field(64, 8);
    for (i, j, t) in [(1, 2, 0.7), (3, 6, -1.1), (4, 7, 2.3)] {
        let phi = basis_automorphism(i, j, t).unwrap();
        let (ps, pst) = (apply_automorphism(&phi, &s).unwrap(), apply_automorphism(&phi, &st).unwrap());
        for d in [
            Density::LagrangianEps { epsilon: 0.7 },
            Density::LagrangianKdv,
            Density::LagrangianMiura,
            Density::H1,
            Density::HM,
            Density::H2,
        ] {
            let a = eval_density(&d, &s, Some(&st)).unwrap();
            let b = eval_density(&d, &ps, Some(&pst)).unwrap();
            let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "{d:?} under ({i},{j},{t}): {worst:e}");
        }
    }
}

#[test]
fn master_lagrangian_limits_are_exact_identities() {
    let s = field(64, 9);
    let st = field(64, 10);
    let sx = s.spectral_diff(1);
    let sx2 = sx.fsquare();
    let quartic = sx2.fmul(&sx2).unwrap();
    let l = eval_density(&Density::LagrangianKdv, &s, Some(&st)).unwrap();
    let le = eval_density(&Density::LagrangianEps { epsilon: 0.3 }, &s, Some(&st)).unwrap();
    for k in 0..s.n() {
        let want = 0.09 / 72.0 * quartic.component(0)[k];
        assert!((le[k] - l[k] - want).abs() < 1e-13);
    }
}
