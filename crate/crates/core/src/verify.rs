//! Property suites behind the `verify` subcommand.
//!
//! Each suite runs at a fixed desk-scale size, records one [`Check`] per
//! property and passes when no gated check fails. Checks marked
//! [`Status::Informational`] report findings without gating.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{
    cd_mul, cd_mul_recursive, derivation, derivation_basis_rank, find_zero_divisor, structure_constants,
    CdElement, OCTONION_LEVEL,
};
use crate::config::Tolerances;
use crate::error::Result;
use crate::flows::{evolve, FlowKind, FlowSpec, MiuraForm};
use crate::grid::{AlgebraField, Grid};
use crate::hamiltonian::{
    jacobi_defect, skew_defect, verify_poisson_flow, PoissonOperator, Structure,
};
use crate::initial::random_smooth;
use crate::symmetry::{
    equivariance_residual, equivariance_residual_unchecked, stabilizer_dimension, SymmetrySpec,
};
use crate::transforms::{conserved_charges, gardner_map, gardner_series, miura_map};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Structures,
    Symmetry,
    Transforms,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Algebra, Suite::Structures, Suite::Symmetry, Suite::Transforms];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Informational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Bound or expected value the check compares against.
    pub tolerance: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub detail: serde_json::Value,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        let ok = value.is_finite() && value <= tolerance;
        Check {
            name: name.into(),
            value,
            tolerance: Some(tolerance),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: serde_json::Value::Null,
        }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: Some(bound),
            status: if value >= bound { Status::Pass } else { Status::Fail },
            detail: serde_json::Value::Null,
        }
    }

    fn equals(name: &str, value: f64, expected: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: Some(expected),
            status: if value == expected { Status::Pass } else { Status::Fail },
            detail: serde_json::Value::Null,
        }
    }

    fn info(name: &str, value: f64, detail: serde_json::Value) -> Self {
        Check { name: name.into(), value, tolerance: None, status: Status::Informational, detail }
    }

    fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn verify(suite: Suite, tol: &Tolerances) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Algebra => algebra_checks(tol)?,
        Suite::Structures => structure_checks(tol)?,
        Suite::Symmetry => symmetry_checks(tol)?,
        Suite::Transforms => transform_checks(tol)?,
    };
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(SuiteReport { suite, passed, checks })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn random_octonion(rng: &mut ChaCha8Rng) -> CdElement {
    let mut c = [0.0; 8];
    c.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    CdElement::octonion(c)
}

fn random_imaginary(rng: &mut ChaCha8Rng) -> CdElement {
    random_octonion(rng).im()
}

const SAMPLES: usize = 1000;

fn algebra_checks(tol: &Tolerances) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c7a);
    let (mut alt, mut leib, mut imag, mut norm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..SAMPLES {
        let a = random_octonion(&mut rng);
        let b = random_octonion(&mut rng);
        let x = random_octonion(&mut rng);
        let y = random_octonion(&mut rng);

        let aa_b = cd_mul(&cd_mul(&a, &a)?, &b)?;
        let a_ab = cd_mul(&a, &cd_mul(&a, &b)?)?;
        let ab_b = cd_mul(&cd_mul(&a, &b)?, &b)?;
        let a_bb = cd_mul(&a, &cd_mul(&b, &b)?)?;
        let scale = a.norm_sq() * b.norm() + a.norm() * b.norm_sq();
        alt = alt.max(aa_b.sub(&a_ab)?.norm() / scale).max(ab_b.sub(&a_bb)?.norm() / scale);

        let (p, q) = (random_imaginary(&mut rng), random_imaginary(&mut rng));
        let lhs = derivation(&p, &q, &cd_mul(&x, &y)?)?;
        let rhs = cd_mul(&derivation(&p, &q, &x)?, &y)?.add(&cd_mul(&x, &derivation(&p, &q, &y)?)?)?;
        let s = p.norm() * q.norm() * x.norm() * y.norm();
        leib = leib.max(lhs.sub(&rhs)?.norm() / s);
        imag = imag.max(derivation(&p, &q, &x)?.re().abs() / (p.norm() * q.norm() * x.norm()));

        let nab = cd_mul(&a, &b)?.norm();
        norm = norm.max((nab - a.norm() * b.norm()).abs() / (a.norm() * b.norm()));
    }
    let rel = tol.algebra_relative;

    let table = structure_constants(OCTONION_LEVEL)?;
    let mut table_mismatches = 0;
    for j in 0..8 {
        for k in 0..8 {
            let a = CdElement::basis(OCTONION_LEVEL, j);
            let b = CdElement::basis(OCTONION_LEVEL, k);
            let (m, sign) = table.product(j, k);
            let rec = cd_mul_recursive(&a, &b)?;
            if rec != CdElement::basis(OCTONION_LEVEL, m).scale(sign) {
                table_mismatches += 1;
            }
        }
    }
    let witness = find_zero_divisor(4)?;
    let octonion_witness = find_zero_divisor(OCTONION_LEVEL)?;

    Ok(vec![
        Check::below("alternativity", alt, rel).with_detail(json!({ "samples": SAMPLES })),
        Check::below("leibniz", leib, rel).with_detail(json!({ "samples": SAMPLES })),
        Check::below("derivation_output_imaginary", imag, rel).with_detail(json!({ "samples": SAMPLES })),
        Check::below("norm_multiplicativity", norm, rel).with_detail(json!({ "samples": SAMPLES })),
        Check::equals("derivation_span_rank", derivation_basis_rank() as f64, 14.0),
        Check::equals("table_vs_recursion_mismatches", table_mismatches as f64, 0.0),
        Check::equals("sedenion_zero_divisor_found", witness.is_some() as u8 as f64, 1.0).with_detail(
            json!(witness.map(|(x, y)| [x.into_coeffs(), y.into_coeffs()])),
        ),
        Check::equals("octonion_zero_divisor_found", octonion_witness.is_some() as u8 as f64, 0.0),
    ])
}

/// Smooth octonionic test data on `n` nodes.
fn test_field(n: usize, seed: u64) -> Result<AlgebraField> {
    let grid = Grid::new(n, 2.0 * PI * 4.0)?;
    Ok(random_smooth(&grid, seed, 5, 0.4))
}

fn relative_skew(k: &PoissonOperator, f: &AlgebraField, g: &AlgebraField) -> Result<f64> {
    let (d, s) = skew_defect(k, f, g)?;
    Ok(if s > 0.0 { d / s } else { d })
}

fn structure_checks(tol: &Tolerances) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut first: f64 = 0.0;
    let mut scalar: f64 = 0.0;
    let mut corrected: f64 = 0.0;
    for seed in 0..10 {
        let u = test_field(256, seed)?;
        first = first.max(verify_poisson_flow(Structure::First, &u)?.max_residual);
        scalar = scalar.max(verify_poisson_flow(Structure::SecondScalarOracle, &u)?.max_residual);
        corrected = corrected.max(verify_poisson_flow(Structure::SecondCorrected, &u)?.max_residual);
    }
    checks.push(Check::below("first_structure_residual", first, tol.first_structure));
    checks.push(Check::below("second_structure_scalar_oracle_residual", scalar, tol.scalar_oracle));
    checks.push(Check::below("second_structure_corrected_residual", corrected, tol.first_structure));

    let f = test_field(128, 100)?;
    let g = test_field(128, 101)?;
    let mut skew_first = relative_skew(&PoissonOperator::First, &f, &g)?;
    let mut skew_second: f64 = 0.0;
    for seed in 200..203 {
        let base = test_field(128, seed)?;
        skew_first = skew_first.max(relative_skew(&PoissonOperator::First, &f, &g)?);
        skew_second = skew_second.max(relative_skew(&PoissonOperator::SecondCorrected { base }, &f, &g)?);
    }
    checks.push(Check::below("skew_first", skew_first, tol.skew));
    checks.push(Check::below("skew_second_corrected", skew_second, tol.skew));

    // Jacobi spot check at n = 32: gated on the complex sector (real part plus
    // one imaginary direction); with several imaginary directions the
    // corrected operator is skew and generates the flow but fails Jacobi,
    // which is reported without gating.
    let small = |s| test_field(32, s);
    let complex = |s| -> Result<AlgebraField> {
        let mut f = small(s)?;
        (2..8).for_each(|m| f.component_mut(m).iter_mut().for_each(|v| *v = 0.0));
        Ok(f)
    };
    let corrected = |base| PoissonOperator::SecondCorrected { base };
    let (u, a, b, c) = (complex(300)?, complex(301)?, complex(302)?, complex(303)?);
    let (sum, scale) = jacobi_defect(corrected, &u, &a, &b, &c)?;
    checks.push(
        Check::below("jacobi_second_corrected_complex_sector", sum / scale.max(f64::MIN_POSITIVE), 1e-6)
            .with_detail(json!({ "absolute": sum, "largest_term": scale, "n": 32 })),
    );
    let (u, a, b, c) = (small(300)?, small(301)?, small(302)?, small(303)?);
    let (sum, scale) = jacobi_defect(corrected, &u, &a, &b, &c)?;
    checks.push(Check::info(
        "jacobi_second_corrected_octonionic",
        sum / scale.max(f64::MIN_POSITIVE),
        json!({ "absolute": sum, "largest_term": scale, "n": 32 }),
    ));
    let (psum, pscale) = jacobi_defect(|base| PoissonOperator::SecondNominal { base }, &u, &a, &b, &c)?;
    checks.push(Check::info(
        "jacobi_second_nominal",
        psum / pscale.max(f64::MIN_POSITIVE),
        json!({ "absolute": psum, "largest_term": pscale, "n": 32 }),
    ));

    let report = verify_poisson_flow(Structure::SecondNominal, &test_field(256, 7)?)?;
    checks.push(Check::info(
        "second_structure_nominal",
        report.max_residual,
        serde_json::to_value(&report)?,
    ));
    Ok(checks)
}

fn kdv_spec(grid: &Grid, dt: f64, t_end: f64) -> FlowSpec {
    FlowSpec::new(FlowKind::Kdv, grid, dt, t_end)
}

fn symmetry_checks(tol: &Tolerances) -> Result<Vec<Check>> {
    let u0 = test_field(128, 11)?;
    let grid = u0.grid().clone();
    let spec = kdv_spec(&grid, 1e-3, 1.0);
    let mut checks = Vec::new();

    let galileo = equivariance_residual(&SymmetrySpec::Galileo { c: 1.0 }, &spec, &u0)?;
    checks.push(Check::below("galileo_kdv", galileo, tol.equivariance));

    let g2 = SymmetrySpec::Automorphism { i: 2, j: 6, t: 0.7 };
    checks.push(Check::below("g2_kdv_v0", equivariance_residual(&g2, &spec, &u0)?, tol.equivariance));
    let gardner = FlowSpec::new(FlowKind::Gardner, &grid, 1e-3, 1.0).with_epsilon(0.5);
    checks.push(Check::below("g2_gardner", equivariance_residual(&g2, &gardner, &u0)?, tol.equivariance));
    let miura = FlowSpec::new(FlowKind::Miura, &grid, 1e-3, 1.0);
    checks.push(Check::below("g2_miura", equivariance_residual(&g2, &miura, &u0)?, tol.equivariance));

    let v = CdElement::octonion([0.0, 0.31, -0.72, 0.18, 0.55, -0.43, 0.27, 0.64]);
    checks.push(Check::equals("stabilizer_dimension_generic_v", stabilizer_dimension(&v)? as f64, 8.0));

    let e7 = kdv_spec(&grid, 1e-3, 1.0).with_v(CdElement::basis(OCTONION_LEVEL, 7));
    let good = equivariance_residual(&SymmetrySpec::Automorphism { i: 1, j: 6, t: 0.7 }, &e7, &u0)?;
    let bad = equivariance_residual_unchecked(&SymmetrySpec::Automorphism { i: 1, j: 2, t: 0.7 }, &e7, &u0)?;
    checks.push(Check::below("su3_stabilizer_e7", good, tol.equivariance));
    let contrast = (bad / good.max(f64::MIN_POSITIVE)).log10();
    checks.push(
        Check::at_least("su3_contrast_orders", contrast, 4.0)
            .with_detail(json!({ "stabilizer": good, "non_stabilizer": bad })),
    );
    Ok(checks)
}

fn transform_checks(tol: &Tolerances) -> Result<Vec<Check>> {
    let r0 = test_field(256, 21)?;
    let grid = r0.grid().clone();
    let (dt, t) = (1e-3, 1.0);
    let mut checks = Vec::new();

    let eps = 0.5;
    let gardner = FlowSpec::new(FlowKind::Gardner, &grid, dt, t).with_epsilon(eps);
    let mapped_after = gardner_map(&evolve(&gardner, &r0)?.last().field, eps)?;
    let evolved_after = evolve(&kdv_spec(&grid, dt, t), &gardner_map(&r0, eps)?)?.last().field.clone();
    checks.push(Check::below(
        "gardner_flow_commutation",
        mapped_after.max_abs_diff(&evolved_after)?,
        tol.flow_commutation,
    ));

    for (name, form) in [("miura_flow_commutation", MiuraForm::Symmetrized), ("miura_flow_commutation_cubic", MiuraForm::Cubic)] {
        let miura = FlowSpec::new(FlowKind::Miura, &grid, dt, t).with_miura_form(form);
        let a = miura_map(&evolve(&miura, &r0)?.last().field)?;
        let b = evolve(&kdv_spec(&grid, dt, t), &miura_map(&r0)?)?.last().field.clone();
        let res = a.max_abs_diff(&b)?;
        checks.push(match form {
            MiuraForm::Symmetrized => Check::below(name, res, tol.flow_commutation),
            MiuraForm::Cubic => Check::info(name, res, json!({ "form": "cubic (r^3)_x / 18" })),
        });
    }

    let u = test_field(128, 22)?;
    let epsilons = [0.1, 0.05, 0.025];
    for order in 1..=5 {
        let series = gardner_series(&u, order + 1)?;
        let res: Vec<f64> = epsilons.iter().map(|&e| series.resubstitution_residual(e)).collect::<Result<_>>()?;
        let slope = loglog_slope(&epsilons, &res);
        let mut c = Check::below(&format!("resubstitution_slope_n{order}"), (slope - (order as f64 + 1.0)).abs(), 0.3);
        c.detail = json!({ "slope": slope, "expected": order + 1, "residuals": res });
        checks.push(c);
    }

    let traj = evolve(&kdv_spec(u.grid(), 1e-3, 1.0).with_snapshot_every(100), &u)?;
    let q0 = conserved_charges(&traj.snapshots[0].field, 6)?;
    let mut worst: f64 = 0.0;
    for s in &traj.snapshots[1..] {
        let q = conserved_charges(&s.field, 6)?;
        for (a, b) in q0.iter().zip(&q) {
            let d = (a - b).abs();
            // relative drift, or absolute drift rescaled so 1e-8 maps onto the
            // 1e-5 bound for charges that start near zero
            worst = worst.max(if a.abs() > 1e-8 { d / a.abs() } else { d * 1e3 });
        }
    }
    checks.push(Check::below("gardner_charge_drift_q0_q5", worst, 1e-5).with_detail(json!({ "initial": q0 })));
    Ok(checks)
}
