//! Right-hand sides and time stepping for the octonionic KdV equation and
//! its Gardner and Miura companions.
//!
//! Every flow has the form `u_t = -u_xxx + N(u)`. The dispersive part is
//! diagonal in Fourier space, `exp(i k^3 t)`, and is integrated exactly by
//! the integrating-factor stepper; `N` collects everything else.
//!
//! | flow    | `N(u)`                                                    |
//! |---------|-----------------------------------------------------------|
//! | KdV     | `-1/2 (u^2)_x - [v, u]`                                   |
//! | Gardner | `-1/2 (r r_x + r_x r) + eps^2/12 ((r^2) r_x + r_x (r^2))` |
//! | Miura   | `1/18 (r^3)_x` (cubic) or `1/12 (r^2 r_x + r_x r^2)`      |
//!
//! The quadratic terms are evaluated in conservation form, `1/2 (u^2)_x`,
//! which equals the symmetrized product exactly in the continuum. Quadratic
//! products are dealiased with the 2/3 rule, cubic ones with the 1/2 rule.

use serde::{Deserialize, Serialize};

use crate::algebra::{structure_constants, CdElement, OCTONION_DIM, OCTONION_LEVEL};
use crate::error::{Error, Result};
use crate::grid::{AlgebraField, Dealias, Grid};
use crate::hamiltonian;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Kdv,
    Gardner,
    Miura,
}

/// Which cubic term the Miura flow carries.
///
/// `Cubic` is `1/18 (r^3)_x`, the Euler-Lagrange equation of the Miura
/// Lagrangian. `Symmetrized` is `1/12 (r^2 r_x + r_x r^2)`, the flow whose
/// solutions the Miura map sends to KdV solutions. The two agree whenever
/// `r` and `r_x` commute (real or single-direction data).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiuraForm {
    #[default]
    Cubic,
    Symmetrized,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    /// Lawson integrating-factor RK4 (exact dispersive propagation).
    #[default]
    IfRk4,
    /// Classical explicit RK4 on the full right-hand side.
    Rk4,
}

/// How the bilinear term of the component form is read: `A_j` as the
/// imaginary part of the external field `v` or as the field's own `B_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentCoupling {
    ExternalField,
    SelfCoupling,
}

/// A right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub enum Flow {
    Kdv { v: CdElement },
    Gardner { epsilon: f64 },
    Miura { form: MiuraForm },
    /// KdV written out in real components through the structure constants.
    ComponentKdv { v: CdElement, coupling: ComponentCoupling },
}

fn require_octonion_field(u: &AlgebraField) -> Result<()> {
    if u.level() != OCTONION_LEVEL {
        return Err(Error::Unsupported(format!(
            "flows act on octonion fields, got level {}",
            u.level()
        )));
    }
    Ok(())
}

fn require_octonion(v: &CdElement) -> Result<()> {
    if v.level() != OCTONION_LEVEL {
        return Err(Error::LevelMismatch(OCTONION_LEVEL, v.level()));
    }
    Ok(())
}

/// `-1/2 d/dx (u^2)`, dealiased.
fn half_square_flux(u: &AlgebraField) -> AlgebraField {
    u.fsquare().dealias(Dealias::TwoThirds).spectral_diff(1).fscale(-0.5)
}

/// `r^2 r_x + r_x r^2`, dealiased.
fn symmetric_cubic(r: &AlgebraField) -> AlgebraField {
    let r2 = r.fsquare();
    let rx = r.spectral_diff(1);
    r2.fanticommutator(&rx).expect("same grid").dealias(Dealias::Half)
}

impl Flow {
    /// Nonlinear part `N(u)`.
    pub fn nonlinear(&self, u: &AlgebraField) -> AlgebraField {
        match self {
            Flow::Kdv { v } => {
                let flux = half_square_flux(u);
                if v.is_zero() {
                    flux
                } else {
                    flux.fsub(&u.fcommutator(v).expect("v is an octonion")).expect("same grid")
                }
            }
            Flow::Gardner { epsilon } => {
                let flux = half_square_flux(u);
                if *epsilon == 0.0 {
                    flux
                } else {
                    flux.faxpy(epsilon * epsilon / 12.0, &symmetric_cubic(u)).expect("same grid")
                }
            }
            Flow::Miura { form: MiuraForm::Cubic } => {
                let r3 = u.fmul(&u.fsquare()).expect("same grid");
                r3.dealias(Dealias::Half).spectral_diff(1).fscale(1.0 / 18.0)
            }
            Flow::Miura { form: MiuraForm::Symmetrized } => symmetric_cubic(u).fscale(1.0 / 12.0),
            Flow::ComponentKdv { v, coupling } => component_nonlinear(u, v, *coupling),
        }
    }

    /// Full right-hand side `-u_xxx + N(u)`.
    pub fn rhs(&self, u: &AlgebraField) -> AlgebraField {
        u.spectral_diff(3).fscale(-1.0).fadd(&self.nonlinear(u)).expect("same grid")
    }
}

/// `u_t = -u_xxx - 1/2 (u^2)_x - [v, u]`.
pub fn kdv_rhs(u: &AlgebraField, v: &CdElement) -> Result<AlgebraField> {
    require_octonion_field(u)?;
    require_octonion(v)?;
    Ok(Flow::Kdv { v: v.clone() }.rhs(u))
}

/// Generalized Gardner equation,
/// `r_t = -r_xxx - 1/2 (r r_x + r_x r) + eps^2/12 ((r^2) r_x + r_x (r^2))`.
pub fn gardner_rhs(r: &AlgebraField, epsilon: f64) -> Result<AlgebraField> {
    require_octonion_field(r)?;
    if !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be finite"));
    }
    Ok(Flow::Gardner { epsilon }.rhs(r))
}

/// Miura equation from the Miura Lagrangian, `r_t = -r_xxx + 1/18 (r^3)_x`.
pub fn miura_rhs(rh: &AlgebraField) -> Result<AlgebraField> {
    require_octonion_field(rh)?;
    Ok(Flow::Miura { form: MiuraForm::Cubic }.rhs(rh))
}

/// Miura flow compatible with the Miura map,
/// `r_t = -r_xxx + 1/12 (r^2 r_x + r_x r^2)`.
pub fn miura_rhs_symmetrized(rh: &AlgebraField) -> Result<AlgebraField> {
    require_octonion_field(rh)?;
    Ok(Flow::Miura { form: MiuraForm::Symmetrized }.rhs(rh))
}

/// KdV in real components `u = b + sum B_i e_i`:
///
/// ```text
/// b_t   = -b_xxx - 1/2 (b^2 - sum_i B_i^2)_x
/// B_i,t = -B_i,xxx - (b B_i)_x - sum_jk A_j B_k (C_jki - C_kji)
/// ```
///
/// with `C` the imaginary structure constants. With
/// [`ComponentCoupling::ExternalField`] `A = Im v`, which reproduces
/// `[v, u]`; with [`ComponentCoupling::SelfCoupling`] `A = B` and the sum
/// vanishes identically by antisymmetry of `C`.
pub fn component_kdv_rhs(
    u: &AlgebraField,
    v: &CdElement,
    coupling: ComponentCoupling,
) -> Result<AlgebraField> {
    require_octonion_field(u)?;
    require_octonion(v)?;
    Ok(Flow::ComponentKdv { v: v.clone(), coupling }.rhs(u))
}

fn component_nonlinear(u: &AlgebraField, v: &CdElement, coupling: ComponentCoupling) -> AlgebraField {
    let grid = u.grid();
    let n = grid.n();
    let b = u.component(0);
    let flux = |f: Vec<f64>| -> Vec<f64> {
        grid.diff(&grid.dealias(&f, Dealias::TwoThirds), 1)
    };

    let mut comps = vec![vec![0.0; n]; OCTONION_DIM];
    let mut real_sq: Vec<f64> = b.iter().map(|x| x * x).collect();
    for i in 1..OCTONION_DIM {
        for (acc, bi) in real_sq.iter_mut().zip(u.component(i)) {
            *acc -= bi * bi;
        }
    }
    comps[0] = flux(real_sq).into_iter().map(|x| -0.5 * x).collect();
    for (i, comp) in comps.iter_mut().enumerate().skip(1) {
        let prod: Vec<f64> = b.iter().zip(u.component(i)).map(|(x, y)| x * y).collect();
        *comp = flux(prod).into_iter().map(|x| -x).collect();
    }

    let sc = structure_constants(OCTONION_LEVEL).expect("octonion table");
    for i in 1..OCTONION_DIM {
        for j in 1..OCTONION_DIM {
            for k in 1..OCTONION_DIM {
                let c = sc.c(j, k, i) - sc.c(k, j, i);
                if c == 0.0 {
                    continue;
                }
                match coupling {
                    ComponentCoupling::ExternalField => {
                        let a = v.coeffs()[j];
                        if a == 0.0 {
                            continue;
                        }
                        for (o, bk) in comps[i].iter_mut().zip(u.component(k)) {
                            *o -= c * a * bk;
                        }
                    }
                    ComponentCoupling::SelfCoupling => {
                        let (aj, bk) = (u.component(j), u.component(k));
                        for p in 0..n {
                            comps[i][p] -= c * aj[p] * bk[p];
                        }
                    }
                }
            }
        }
    }
    AlgebraField::from_components(grid, OCTONION_LEVEL, comps).expect("eight components")
}

/// Exact solution operator of `u_t = -u_xxx` over time `tau`.
pub fn linear_propagate(u: &AlgebraField, tau: f64) -> AlgebraField {
    let grid = u.grid();
    let phases: Vec<num_complex::Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| num_complex::Complex64::from_polar(1.0, k * k * k * tau))
        .collect();
    let comps = u
        .components()
        .iter()
        .map(|c| {
            let mut spec = grid.forward(c);
            for (s, p) in spec.iter_mut().zip(&phases) {
                *s *= p;
            }
            let nyq = grid.n() / 2;
            spec[nyq] = num_complex::Complex64::new(spec[nyq].re * phases[nyq].re, 0.0);
            grid.inverse(spec)
        })
        .collect();
    AlgebraField::from_components(grid, u.level(), comps).expect("same shape")
}

/// One step of size `dt` for `u_t = -u_xxx + N(u)`.
pub fn step_field(
    u: &AlgebraField,
    dt: f64,
    stepper: Stepper,
    nonlinear: &dyn Fn(&AlgebraField) -> AlgebraField,
) -> AlgebraField {
    let axpy = |a: &AlgebraField, s: f64, b: &AlgebraField| a.faxpy(s, b).expect("same grid");
    match stepper {
        Stepper::Rk4 => {
            let f = |w: &AlgebraField| axpy(&nonlinear(w), -1.0, &w.spectral_diff(3));
            let k1 = f(u);
            let k2 = f(&axpy(u, 0.5 * dt, &k1));
            let k3 = f(&axpy(u, 0.5 * dt, &k2));
            let k4 = f(&axpy(u, dt, &k3));
            let sum = axpy(&axpy(&axpy(&k1, 2.0, &k2), 2.0, &k3), 1.0, &k4);
            axpy(u, dt / 6.0, &sum)
        }
        Stepper::IfRk4 => {
            let half = 0.5 * dt;
            let e_half_u = linear_propagate(u, half);
            let e_full_u = linear_propagate(&e_half_u, half);

            let k1 = nonlinear(u);
            let k2 = nonlinear(&linear_propagate(&axpy(u, half, &k1), half));
            let k3 = nonlinear(&axpy(&e_half_u, half, &k2));
            let k4 = nonlinear(&axpy(&e_full_u, dt, &linear_propagate(&k3, half)));

            let mid = linear_propagate(&k2.fadd(&k3).expect("same grid"), half);
            let acc = axpy(&axpy(&linear_propagate(&k1, dt), 2.0, &mid), 1.0, &k4);
            axpy(&e_full_u, dt / 6.0, &acc)
        }
    }
}

/// Full description of one evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub kind: FlowKind,
    /// Gardner deformation parameter (ignored by other flows).
    pub epsilon: f64,
    /// External field of the KdV bracket term.
    pub v: CdElement,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub stepper: Stepper,
    pub miura_form: MiuraForm,
    /// Record a snapshot every this many steps; 0 keeps only the first and
    /// last states.
    pub snapshot_every: usize,
}

impl FlowSpec {
    pub fn new(kind: FlowKind, grid: &Grid, dt: f64, t_end: f64) -> Self {
        FlowSpec {
            kind,
            epsilon: 0.0,
            v: CdElement::zero(OCTONION_LEVEL),
            grid: grid.clone(),
            dt,
            t_end,
            stepper: Stepper::IfRk4,
            miura_form: MiuraForm::Cubic,
            snapshot_every: 0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_v(mut self, v: CdElement) -> Self {
        self.v = v;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn with_miura_form(mut self, form: MiuraForm) -> Self {
        self.miura_form = form;
        self
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("{} must be positive and finite", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", format!("{} must be finite and >= 0", self.t_end)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be finite"));
        }
        require_octonion(&self.v)?;
        if self.v.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("v", "must be finite"));
        }
        if self.kind != FlowKind::Kdv && !self.v.is_zero() {
            return Err(Error::invalid("v", "the Gardner and Miura flows require v = 0"));
        }
        Ok(())
    }

    pub fn flow(&self) -> Flow {
        match self.kind {
            FlowKind::Kdv => Flow::Kdv { v: self.v.clone() },
            FlowKind::Gardner => Flow::Gardner { epsilon: self.epsilon },
            FlowKind::Miura => Flow::Miura { form: self.miura_form },
        }
    }

    /// Number of steps and the step actually used: `t_end` is always hit
    /// exactly, so `dt` is shrunk to `t_end / ceil(t_end / dt)` if needed.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: AlgebraField,
}

/// Per-step diagnostics: `mass = integral of u` (all eight components),
/// `energy = integral of Re(u^2)` and the two Hamiltonians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeRecord {
    pub t: f64,
    pub mass: [f64; 8],
    pub energy: f64,
    pub h1: f64,
    pub hm: f64,
}

impl ChargeRecord {
    pub fn measure(t: f64, u: &AlgebraField) -> Self {
        let mut mass = [0.0; 8];
        mass.copy_from_slice(u.integrate().coeffs());
        let grid = u.grid();
        let energy = grid.integrate(u.fsquare().component(0));
        let h1 = grid.integrate(&hamiltonian::h1_density(u));
        let hm = grid.integrate(&hamiltonian::hm_density(u));
        ChargeRecord { t, mass, energy, h1, hm }
    }

    pub const CSV_HEADER: &'static str =
        "t,mass_0,mass_1,mass_2,mass_3,mass_4,mass_5,mass_6,mass_7,energy,h1,hM";

    pub fn csv_row(&self) -> String {
        let mut s = format!("{}", self.t);
        for m in &self.mass {
            s.push_str(&format!(",{m}"));
        }
        s.push_str(&format!(",{},{},{}", self.energy, self.h1, self.hm));
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub charges: Vec<ChargeRecord>,
    pub steps: usize,
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory holds at least the initial state")
    }

    /// `max_t |Q(t) - Q(0)|` for a scalar charge.
    pub fn drift(&self, charge: impl Fn(&ChargeRecord) -> f64) -> f64 {
        let q0 = charge(&self.charges[0]);
        self.charges.iter().map(|c| (charge(c) - q0).abs()).fold(0.0, f64::max)
    }

    pub fn write_charges_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", ChargeRecord::CSV_HEADER)?;
        for c in &self.charges {
            writeln!(w, "{}", c.csv_row())?;
        }
        Ok(())
    }
}

/// Values beyond this are treated as overflow.
pub const BLOW_UP_LIMIT: f64 = 1e100;

/// Integrate `spec` from `u0`, recording snapshots at the configured cadence
/// and charges after every step. Aborts on non-finite values.
pub fn evolve(spec: &FlowSpec, u0: &AlgebraField) -> Result<Trajectory> {
    evolve_flow(spec, &spec.flow(), u0)
}

/// [`evolve`] with an explicit right-hand side (used for cross-checks such
/// as the component form).
pub fn evolve_flow(spec: &FlowSpec, flow: &Flow, u0: &AlgebraField) -> Result<Trajectory> {
    spec.validate()?;
    require_octonion_field(u0)?;
    spec.grid.check_same(u0.grid())?;

    let (steps, dt) = spec.schedule();
    let nonlinear = |w: &AlgebraField| flow.nonlinear(w);
    let mut u = u0.clone();
    let mut snapshots = vec![Snapshot { t: 0.0, field: u.clone() }];
    let mut charges = vec![ChargeRecord::measure(0.0, &u)];

    for step in 1..=steps {
        u = step_field(&u, dt, spec.stepper, &nonlinear);
        let t = step as f64 * dt;
        let max_abs = u.max_abs();
        if !u.is_finite() || max_abs > BLOW_UP_LIMIT {
            let max_abs = if u.is_finite() { max_abs } else { f64::INFINITY };
            return Err(Error::BlowUp { step, t, max_abs });
        }
        charges.push(ChargeRecord::measure(t, &u));
        let due = spec.snapshot_every > 0 && step % spec.snapshot_every == 0;
        if due || step == steps {
            snapshots.push(Snapshot { t, field: u.clone() });
        }
    }
    Ok(Trajectory { snapshots, charges, steps, dt })
}

/// `3c sech^2(sqrt(c)/2 (x - x0))`, an exact traveling wave of the real KdV
/// equation with speed `c`; the distance to `x0` is taken periodically.
pub fn soliton_profile(grid: &Grid, c: f64, x0: f64) -> AlgebraField {
    let l = grid.length();
    AlgebraField::octonion_component(grid, 0, |x| {
        let d = (x - x0 + 0.5 * l).rem_euclid(l) - 0.5 * l;
        let s = 1.0 / (0.5 * c.sqrt() * d).cosh();
        3.0 * c * s * s
    })
}
