use std::f64::consts::PI;

use octokdv::algebra::CdElement;
use octokdv::flows::{evolve, kdv_rhs, soliton_profile, FlowKind, FlowSpec, Stepper};
use octokdv::grid::{AlgebraField, Grid};
use octokdv::initial::random_smooth;
use octokdv::symmetry::{galileo_boost, ShiftMode};
use octokdv::Error;

fn grid() -> Grid {
    Grid::new(64, 2.0 * PI * 3.0).unwrap()
}

#[test]
fn integrating_factor_and_explicit_rk4_agree() {
    let g = grid();
    let u0 = random_smooth(&g, 11, 4, 0.5);
    let spec = FlowSpec::new(FlowKind::Kdv, &g, 2e-4, 0.1);
    let a = evolve(&spec.clone(), &u0).unwrap();
    let b = evolve(&spec.with_stepper(Stepper::Rk4), &u0).unwrap();
    let diff = a.last().field.max_abs_diff(&b.last().field).unwrap();
    assert!(diff < 1e-8, "{diff:e}");
}

#[test]
fn soliton_translates_at_its_speed() {
    let g = Grid::new(256, 60.0).unwrap();
    let c = 1.0;
    let t = 2.0;
    let u0 = soliton_profile(&g, c, 20.0);
    let traj = evolve(&FlowSpec::new(FlowKind::Kdv, &g, 1e-3, t), &u0).unwrap();
    let want = soliton_profile(&g, c, 20.0 + c * t);
    let err = traj.last().field.max_abs_diff(&want).unwrap();
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn boosted_trajectory_solves_kdv() {
    let g = grid();
    let u0 = random_smooth(&g, 12, 4, 0.5);
    let dt = 1e-3;
    let spec = FlowSpec::new(FlowKind::Kdv, &g, dt, 4.0 * dt).with_snapshot_every(1);
    let traj = evolve(&spec, &u0).unwrap();
    let boosted = galileo_boost(&traj, 0.8, ShiftMode::Spectral).unwrap();
    let s = &boosted.snapshots;
    // fourth-order centered time derivative at the middle sample
    let ut = s[0]
        .field
        .fsub(&s[4].field)
        .unwrap()
        .faxpy(-8.0, &s[1].field)
        .unwrap()
        .faxpy(8.0, &s[3].field)
        .unwrap()
        .fscale(1.0 / (12.0 * dt));
    let rhs = kdv_rhs(&s[2].field, &CdElement::zero(3)).unwrap();
    let res = ut.max_abs_diff(&rhs).unwrap() / rhs.max_abs();
    assert!(res < 1e-6, "{res:e}");
}

#[test]
fn twisted_flow_keeps_real_and_parallel_mass() {
    let g = grid();
    let u0 = random_smooth(&g, 13, 4, 0.5)
        .fadd_constant(&CdElement::octonion([0.3, 0.2, -0.1, 0.4, 0.0, 0.1, -0.2, 0.3]))
        .unwrap();
    let v = CdElement::octonion([0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let spec = FlowSpec::new(FlowKind::Kdv, &g, 1e-3, 0.5).with_v(v);
    let traj = evolve(&spec, &u0).unwrap();
    assert!(traj.drift(|c| c.mass[0]) < 1e-10);
    assert!(traj.drift(|c| c.mass[1]) < 1e-10);
    assert!(traj.drift(|c| c.energy) < 1e-8);
    // the transverse means rotate in the plane orthogonal to v
    assert!(traj.drift(|c| c.mass[2]) > 1e-3);
    let transverse = |c: &octokdv::flows::ChargeRecord| c.mass[2..].iter().map(|m| m * m).sum::<f64>();
    assert!(traj.drift(transverse) < 1e-8);
}

#[test]
fn snapshot_cadence_includes_final_state() {
    let g = grid();
    let u0 = random_smooth(&g, 14, 3, 0.2);
    let traj = evolve(&FlowSpec::new(FlowKind::Kdv, &g, 0.01, 0.07).with_snapshot_every(3), &u0).unwrap();
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(times.len(), 4);
    assert!((times[3] - 0.07).abs() < 1e-12);
    assert_eq!(traj.charges.len(), traj.steps + 1);
}

#[test]
fn explicit_rk4_reports_blow_up() {
    let g = grid();
    let u0 = random_smooth(&g, 15, 8, 1.0);
    let spec = FlowSpec::new(FlowKind::Kdv, &g, 0.05, 20.0).with_stepper(Stepper::Rk4);
    match evolve(&spec, &u0) {
        Err(Error::BlowUp { step, .. }) => assert!(step > 0),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn mismatched_grids_are_rejected() {
    let u0 = random_smooth(&Grid::new(32, 10.0).unwrap(), 1, 3, 0.2);
    assert!(evolve(&FlowSpec::new(FlowKind::Kdv, &grid(), 0.01, 0.1), &u0).is_err());
    let lower = AlgebraField::zeros(&grid(), 2);
    assert!(evolve(&FlowSpec::new(FlowKind::Kdv, &grid(), 0.01, 0.1), &lower).is_err());
}
