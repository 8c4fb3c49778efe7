//! Galileo boosts, G2 automorphisms and equivariance harnesses.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    automorphism_exp, basis_derivation_matrix, derivation_algebra_basis, numerical_rank, Automorphism,
    CdElement, OctonionMatrix, OCTONION_DIM, OCTONION_LEVEL, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::flows::{evolve, ChargeRecord, FlowSpec, Snapshot, Trajectory};
use crate::grid::AlgebraField;

/// Tolerance of the stabilizer condition `D(v) = 0`.
pub const STABILIZER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SymmetrySpec {
    /// `x -> x + c t`, `u -> u + c`.
    Galileo { c: f64 },
    /// `exp(t D(e_i, e_j))` applied nodewise.
    Automorphism { i: usize, j: usize, t: f64 },
}

impl SymmetrySpec {
    pub fn label(&self) -> String {
        match self {
            SymmetrySpec::Galileo { c } => format!("galileo(c={c})"),
            SymmetrySpec::Automorphism { i, j, t } => format!("automorphism(e{i},e{j},t={t})"),
        }
    }
}

/// How the spatial shift `x -> x - c t` is realized on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Trigonometric interpolation; exact for band-limited fields.
    #[default]
    Spectral,
    /// Integer roll of the nodes; `c t` must be a multiple of the spacing.
    Commensurate,
}

/// `w(x) = u(x - c t) + c`: the boosted field at time `t`.
pub fn galileo_field(u: &AlgebraField, c: f64, t: f64, mode: ShiftMode) -> Result<AlgebraField> {
    let delta = c * t;
    let shifted = match mode {
        ShiftMode::Spectral => u.shift(delta),
        ShiftMode::Commensurate => {
            let dx = u.grid().dx();
            let k = delta / dx;
            if (k - k.round()).abs() > 1e-9 * k.abs().max(1.0) {
                return Err(Error::Incommensurate {
                    time: t,
                    spacing: dx,
                    admissible_dt: if c != 0.0 { dx / c.abs() } else { f64::INFINITY },
                });
            }
            let n = u.n() as i64;
            let roll = (k.round() as i64).rem_euclid(n) as usize;
            let comps = u
                .components()
                .iter()
                .map(|f| {
                    let mut g = f.clone();
                    g.rotate_right(roll);
                    g
                })
                .collect();
            AlgebraField::from_components(u.grid(), u.level(), comps)?
        }
    };
    shifted.fadd_constant(&CdElement::real(u.level(), c))
}

/// Boost every snapshot; charges are re-measured at the snapshot times.
pub fn galileo_boost(traj: &Trajectory, c: f64, mode: ShiftMode) -> Result<Trajectory> {
    if !c.is_finite() {
        return Err(Error::invalid("c", "must be finite"));
    }
    let snapshots = traj
        .snapshots
        .iter()
        .map(|s| Ok(Snapshot { t: s.t, field: galileo_field(&s.field, c, s.t, mode)? }))
        .collect::<Result<Vec<_>>>()?;
    let charges = snapshots.iter().map(|s| ChargeRecord::measure(s.t, &s.field)).collect();
    Ok(Trajectory { snapshots, charges, steps: traj.steps, dt: traj.dt })
}

fn cache() -> &'static Mutex<HashMap<(usize, usize, u64), Automorphism>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, u64), Automorphism>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `exp(t D(e_i, e_j))`, memoized per `(i, j, t)`.
pub fn basis_automorphism(i: usize, j: usize, t: f64) -> Result<Automorphism> {
    if !(1..OCTONION_DIM).contains(&i) || !(1..OCTONION_DIM).contains(&j) {
        return Err(Error::invalid("generator", format!("(e{i}, e{j}) must be imaginary basis units")));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    let key = (i, j, t.to_bits());
    if let Some(a) = cache().lock().expect("cache poisoned").get(&key) {
        return Ok(a.clone());
    }
    let a = automorphism_exp(&CdElement::basis(OCTONION_LEVEL, i), &CdElement::basis(OCTONION_LEVEL, j), t)?;
    cache().lock().expect("cache poisoned").insert(key, a.clone());
    Ok(a)
}

/// Apply an automorphism at every node.
pub fn apply_automorphism(phi: &Automorphism, u: &AlgebraField) -> Result<AlgebraField> {
    u.map_octonion(|x| phi.apply_coeffs(x))
}

fn octonion_vector(v: &CdElement) -> Result<SVector<f64, 8>> {
    if v.level() != OCTONION_LEVEL {
        return Err(Error::LevelMismatch(v.level(), OCTONION_LEVEL));
    }
    Ok(SVector::from_column_slice(v.coeffs()))
}

/// `|D(e_i, e_j) v|`.
pub fn stabilizer_defect(i: usize, j: usize, v: &CdElement) -> Result<f64> {
    Ok((basis_derivation_matrix(i, j) * octonion_vector(v)?).norm())
}

/// Basis pairs `(i, j)`, `i < j`, whose derivation annihilates `v`.
pub fn stabilizing_pairs(v: &CdElement) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for i in 1..OCTONION_DIM {
        for j in i + 1..OCTONION_DIM {
            if stabilizer_defect(i, j, v)? <= STABILIZER_TOL {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Orthonormal basis (Frobenius) of `{D in der(O) : D v = 0}`, the null
/// space of `D -> D v` on the 14-dimensional derivation algebra.
pub fn stabilizer_basis(v: &CdElement) -> Result<Vec<OctonionMatrix>> {
    let x = octonion_vector(v)?;
    let basis = derivation_algebra_basis();
    let mut m = DMatrix::zeros(OCTONION_DIM, basis.len());
    for (col, d) in basis.iter().enumerate() {
        m.set_column(col, &(d * x));
    }
    let nullity = basis.len() - numerical_rank(&m, RANK_TOL);
    let eig = SymmetricEigen::new(m.transpose() * &m);
    let mut idx: Vec<usize> = (0..basis.len()).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    Ok(idx
        .into_iter()
        .take(nullity)
        .map(|col| {
            let c = eig.eigenvectors.column(col);
            basis.iter().zip(c.iter()).fold(OctonionMatrix::zeros(), |acc, (b, w)| acc + b * *w)
        })
        .collect())
}

/// Dimension of the stabilizer of `v` in `der(O)`: 14 for real `v`, 8 for
/// any nonzero imaginary part.
pub fn stabilizer_dimension(v: &CdElement) -> Result<usize> {
    Ok(stabilizer_basis(v)?.len())
}

fn symmetry_action(spec: &SymmetrySpec, flow_v: &CdElement, check: bool) -> Result<Box<dyn Fn(&AlgebraField, f64) -> Result<AlgebraField>>> {
    match *spec {
        SymmetrySpec::Galileo { c } => {
            if !c.is_finite() {
                return Err(Error::invalid("c", "must be finite"));
            }
            Ok(Box::new(move |u: &AlgebraField, t: f64| galileo_field(u, c, t, ShiftMode::Spectral)))
        }
        SymmetrySpec::Automorphism { i, j, t } => {
            if check {
                let defect = stabilizer_defect(i, j, flow_v)?;
                if defect > STABILIZER_TOL {
                    return Err(Error::StabilizerViolation { i, j, defect });
                }
            }
            let phi = basis_automorphism(i, j, t)?;
            Ok(Box::new(move |u: &AlgebraField, _t: f64| apply_automorphism(&phi, u)))
        }
    }
}

/// `max |g(evolve(u0))(t_end) - evolve(g(u0))(t_end)|`. Automorphisms must
/// fix the external field `v` of the flow, otherwise the spec is rejected.
pub fn equivariance_residual(spec: &SymmetrySpec, flow: &FlowSpec, u0: &AlgebraField) -> Result<f64> {
    residual(spec, flow, u0, true)
}

/// [`equivariance_residual`] without the stabilizer check, for negative
/// controls.
pub fn equivariance_residual_unchecked(spec: &SymmetrySpec, flow: &FlowSpec, u0: &AlgebraField) -> Result<f64> {
    residual(spec, flow, u0, false)
}

fn residual(spec: &SymmetrySpec, flow: &FlowSpec, u0: &AlgebraField, check: bool) -> Result<f64> {
    let act = symmetry_action(spec, &flow.v, check)?;
    let (steps, dt) = flow.schedule();
    let t_end = steps as f64 * dt;
    let direct = act(&evolve(flow, u0)?.last().field, t_end)?;
    let transformed = evolve(flow, &act(u0, 0.0)?)?.last().field.clone();
    direct.max_abs_diff(&transformed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryResult {
    pub spec: SymmetrySpec,
    pub label: String,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

/// Evaluate several specs in parallel, one thread each.
pub fn symmetry_report(specs: &[SymmetrySpec], flow: &FlowSpec, u0: &AlgebraField) -> Vec<SymmetryResult> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| scope.spawn(move || (spec, equivariance_residual(spec, flow, u0))))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                let (spec, res) = h.join().expect("symmetry worker panicked");
                let (residual, error) = match res {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SymmetryResult { spec: *spec, label: spec.label(), residual, error }
            })
            .collect()
    })
}
