//! Periodic grids and algebra-valued fields sampled on them.
//!
//! Derivatives are Fourier multipliers applied to each real component
//! independently. Odd-order derivatives drop the Nyquist mode so that the
//! discrete first derivative stays real and antisymmetric.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::algebra::{dim_of, structure_constants, CdElement, OCTONION_LEVEL};
use crate::error::{Error, Result};

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    wavenumbers: Vec<f64>,
}

/// Periodic domain `[0, length)` with `n` equispaced nodes.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).field("length", &self.length).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

/// Spectral truncation applied after forming nonlinear products.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    None,
    /// Keep modes `|m| <= n/3` (quadratic products).
    TwoThirds,
    /// Keep modes `|m| <= n/4` (cubic and quartic products).
    Half,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length = {length} must be positive and finite")));
        }
        let mut planner = RealFftPlanner::<f64>::new();
        let wavenumbers = (0..=n / 2).map(|m| 2.0 * PI * m as f64 / length).collect();
        let plans = Plans {
            r2c: planner.plan_fft_forward(n),
            c2r: planner.plan_fft_inverse(n),
            wavenumbers,
        };
        Ok(Grid { n, length, plans: Arc::new(plans) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Nonnegative wavenumbers `2 pi m / L`, `m = 0..=n/2`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.plans.wavenumbers
    }

    /// Largest retained mode index under `rule`.
    pub fn cutoff(&self, rule: Dealias) -> usize {
        match rule {
            Dealias::None => self.n / 2,
            Dealias::TwoThirds => self.n / 3,
            Dealias::Half => self.n / 4,
        }
    }

    /// Unnormalized forward transform of a real sequence.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(f.len(), self.n);
        let mut input = f.to_vec();
        let mut out = self.plans.r2c.make_output_vec();
        self.plans.r2c.process(&mut input, &mut out).expect("buffer sizes match the plan");
        out
    }

    /// Inverse of [`Grid::forward`], including the `1/n` factor.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        spec[0].im = 0.0;
        spec[self.n / 2].im = 0.0;
        let mut out = self.plans.c2r.make_output_vec();
        self.plans.c2r.process(&mut spec, &mut out).expect("buffer sizes match the plan");
        let inv = 1.0 / self.n as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        out
    }

    /// `order`-th derivative of a real periodic sequence.
    pub fn diff(&self, f: &[f64], order: u32) -> Vec<f64> {
        if order == 0 {
            return f.to_vec();
        }
        let mut spec = self.forward(f);
        let i_pow = match order % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        for (c, &k) in spec.iter_mut().zip(self.wavenumbers()) {
            *c *= i_pow * k.powi(order as i32);
        }
        if order % 2 == 1 {
            spec[self.n / 2] = Complex64::new(0.0, 0.0);
        }
        self.inverse(spec)
    }

    /// Zero every mode above the cutoff of `rule`.
    pub fn dealias(&self, f: &[f64], rule: Dealias) -> Vec<f64> {
        if rule == Dealias::None {
            return f.to_vec();
        }
        let cut = self.cutoff(rule);
        let mut spec = self.forward(f);
        spec.iter_mut().skip(cut + 1).for_each(|c| *c = Complex64::new(0.0, 0.0));
        self.inverse(spec)
    }

    /// Trigonometric interpolation of `f(x - delta)`.
    pub fn shift(&self, f: &[f64], delta: f64) -> Vec<f64> {
        let mut spec = self.forward(f);
        for (c, &k) in spec.iter_mut().zip(self.wavenumbers()) {
            *c *= Complex64::from_polar(1.0, -k * delta);
        }
        // the Nyquist mode cannot carry a phase in a real signal
        let nyq = self.n / 2;
        spec[nyq] = Complex64::new(spec[nyq].re, 0.0);
        self.inverse(spec)
    }

    /// Rectangle rule, `dx * sum f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.dx() * f.iter().sum::<f64>()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(self.n, self.length, other.n, other.length));
        }
        Ok(())
    }
}

/// Algebra-valued field on a periodic grid, stored component-major:
/// `comps[m][k]` is coefficient `m` at node `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraField {
    grid: Grid,
    level: u32,
    comps: Vec<Vec<f64>>,
}

impl AlgebraField {
    pub fn zeros(grid: &Grid, level: u32) -> Self {
        let comps = vec![vec![0.0; grid.n()]; dim_of(level)];
        AlgebraField { grid: grid.clone(), level, comps }
    }

    pub fn from_components(grid: &Grid, level: u32, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != dim_of(level) {
            return Err(Error::BadLength { level, expected: dim_of(level), got: comps.len() });
        }
        if let Some(bad) = comps.iter().find(|c| c.len() != grid.n()) {
            return Err(Error::invalid(
                "comps",
                format!("component has {} samples, grid has {}", bad.len(), grid.n()),
            ));
        }
        Ok(AlgebraField { grid: grid.clone(), level, comps })
    }

    /// Sample `f(x)`, which returns the `2^level` coefficients at `x`.
    pub fn from_fn(grid: &Grid, level: u32, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut field = Self::zeros(grid, level);
        for k in 0..grid.n() {
            let v = f(grid.x(k));
            if v.len() != field.dim() {
                return Err(Error::BadLength { level, expected: field.dim(), got: v.len() });
            }
            for (m, c) in v.into_iter().enumerate() {
                field.comps[m][k] = c;
            }
        }
        Ok(field)
    }

    /// Octonion field whose only nonzero component is `component`.
    pub fn octonion_component(grid: &Grid, component: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut field = Self::zeros(grid, OCTONION_LEVEL);
        field.comps[component] = grid.nodes().into_iter().map(f).collect();
        field
    }

    /// Field equal to the constant `c` at every node.
    pub fn constant(grid: &Grid, c: &CdElement) -> Self {
        let comps = c.coeffs().iter().map(|&v| vec![v; grid.n()]).collect();
        AlgebraField { grid: grid.clone(), level: c.level(), comps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn component(&self, m: usize) -> &[f64] {
        &self.comps[m]
    }

    pub fn component_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.comps[m]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Value at node `k`.
    pub fn at(&self, k: usize) -> CdElement {
        let coeffs = self.comps.iter().map(|c| c[k]).collect();
        CdElement::new(self.level, coeffs).expect("component count matches level")
    }

    pub fn set(&mut self, k: usize, value: &CdElement) -> Result<()> {
        if value.level() != self.level {
            return Err(Error::LevelMismatch(self.level, value.level()));
        }
        for (c, &v) in self.comps.iter_mut().zip(value.coeffs()) {
            c[k] = v;
        }
        Ok(())
    }

    fn check_compatible(&self, other: &AlgebraField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(())
    }

    fn map_components(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        AlgebraField {
            grid: self.grid.clone(),
            level: self.level,
            comps: self.comps.iter().map(|c| f(c)).collect(),
        }
    }

    /// Componentwise Fourier derivative of the given order.
    pub fn spectral_diff(&self, order: u32) -> Self {
        self.map_components(|c| self.grid.diff(c, order))
    }

    pub fn dealias(&self, rule: Dealias) -> Self {
        if rule == Dealias::None {
            return self.clone();
        }
        self.map_components(|c| self.grid.dealias(c, rule))
    }

    /// `f(x - delta)` by trigonometric interpolation.
    pub fn shift(&self, delta: f64) -> Self {
        self.map_components(|c| self.grid.shift(c, delta))
    }

    /// Periodic rectangle-rule integral of every component.
    pub fn integrate(&self) -> CdElement {
        let coeffs = self.comps.iter().map(|c| self.grid.integrate(c)).collect();
        CdElement::new(self.level, coeffs).expect("component count matches level")
    }

    /// Nodewise product `self * other`.
    pub fn fmul(&self, other: &AlgebraField) -> Result<Self> {
        self.check_compatible(other)?;
        let sc = structure_constants(self.level)?;
        let dim = self.dim();
        let n = self.n();
        let mut out = vec![vec![0.0; n]; dim];
        for j in 0..dim {
            let a = &self.comps[j];
            for k in 0..dim {
                let (m, sigma) = sc.product(j, k);
                let b = &other.comps[k];
                let o = &mut out[m];
                for p in 0..n {
                    o[p] += sigma * a[p] * b[p];
                }
            }
        }
        Ok(AlgebraField { grid: self.grid.clone(), level: self.level, comps: out })
    }

    /// Nodewise `self^2`.
    pub fn fsquare(&self) -> Self {
        self.fmul(self).expect("a field is compatible with itself")
    }

    /// Symmetrized product `a b + b a`.
    pub fn fanticommutator(&self, other: &AlgebraField) -> Result<Self> {
        self.fmul(other)?.fadd(&other.fmul(self)?)
    }

    pub fn fadd(&self, other: &AlgebraField) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn fsub(&self, other: &AlgebraField) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    /// `self + s * other`.
    pub fn faxpy(&self, s: f64, other: &AlgebraField) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a + s * b))
    }

    pub fn fscale(&self, s: f64) -> Self {
        self.map_components(|c| c.iter().map(|v| v * s).collect())
    }

    /// Add a constant element at every node.
    pub fn fadd_constant(&self, c: &CdElement) -> Result<Self> {
        if c.level() != self.level {
            return Err(Error::LevelMismatch(self.level, c.level()));
        }
        let mut out = self.clone();
        for (comp, &v) in out.comps.iter_mut().zip(c.coeffs()) {
            comp.iter_mut().for_each(|x| *x += v);
        }
        Ok(out)
    }

    /// Real part, as a field of the same level.
    pub fn freal(&self) -> Self {
        let mut out = Self::zeros(&self.grid, self.level);
        out.comps[0] = self.comps[0].clone();
        out
    }

    /// Imaginary part, as a field of the same level.
    pub fn fimag(&self) -> Self {
        let mut out = self.clone();
        out.comps[0].iter_mut().for_each(|v| *v = 0.0);
        out
    }

    pub fn fconj(&self) -> Self {
        let mut out = self.fscale(-1.0);
        out.comps[0] = self.comps[0].clone();
        out
    }

    /// Nodewise `[v, f]` for a constant `v`.
    pub fn fcommutator(&self, v: &CdElement) -> Result<Self> {
        let vf = AlgebraField::constant(&self.grid, v);
        vf.fmul(self)?.fsub(&self.fmul(&vf)?)
    }

    /// Nodewise `[f, g]` of two fields.
    pub fn fcommutator_field(&self, other: &AlgebraField) -> Result<Self> {
        self.fmul(other)?.fsub(&other.fmul(self)?)
    }

    /// Apply an octonion-to-octonion map at every node.
    pub fn map_octonion(&self, f: impl Fn(&[f64; 8]) -> [f64; 8]) -> Result<Self> {
        if self.level != OCTONION_LEVEL {
            return Err(Error::Unsupported(format!(
                "nodewise octonion map on a level-{} field",
                self.level
            )));
        }
        let mut out = Self::zeros(&self.grid, self.level);
        let mut x = [0.0; 8];
        for k in 0..self.n() {
            for (m, xm) in x.iter_mut().enumerate() {
                *xm = self.comps[m][k];
            }
            let y = f(&x);
            for (m, ym) in y.iter().enumerate() {
                out.comps[m][k] = *ym;
            }
        }
        Ok(out)
    }

    fn zip(&self, other: &AlgebraField, f: impl Fn(f64, f64) -> f64) -> Self {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        AlgebraField { grid: self.grid.clone(), level: self.level, comps }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest nodewise norm `max_k |u(x_k)|`.
    pub fn max_norm(&self) -> f64 {
        (0..self.n())
            .map(|k| self.comps.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// `max |self - other|` over nodes and components.
    pub fn max_abs_diff(&self, other: &AlgebraField) -> Result<f64> {
        Ok(self.fsub(other)?.max_abs())
    }

    /// Snapshot CSV: header `x,u0,...,u{dim-1}`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> =
            std::iter::once("x".to_string()).chain((0..self.dim()).map(|m| format!("u{m}"))).collect();
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.n() {
            write!(w, "{}", self.grid.x(k))?;
            for c in &self.comps {
                write!(w, ",{}", c[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parse a snapshot written by [`AlgebraField::write_csv`]. The domain
    /// length is recovered from the node spacing.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"x") {
            return Err(Error::Parse("snapshot header must start with `x`".into()));
        }
        let dim = cols.len() - 1;
        if !dim.is_power_of_two() {
            return Err(Error::Parse(format!("{dim} components is not a power of two")));
        }
        for (m, c) in cols[1..].iter().enumerate() {
            if *c != format!("u{m}") {
                return Err(Error::Parse(format!("unexpected column `{c}`")));
            }
        }
        let level = dim.trailing_zeros();
        let mut xs = Vec::new();
        let mut comps = vec![Vec::new(); dim];
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))?;
            if vals.len() != dim + 1 {
                return Err(Error::Parse(format!("row {} has {} columns", row + 2, vals.len())));
            }
            xs.push(vals[0]);
            for (m, v) in vals[1..].iter().enumerate() {
                comps[m].push(*v);
            }
        }
        if xs.len() < 2 {
            return Err(Error::Parse("snapshot needs at least two rows".into()));
        }
        let length = (xs[1] - xs[0]) * xs.len() as f64;
        let grid = Grid::new(xs.len(), length)?;
        AlgebraField::from_components(&grid, level, comps)
    }
}
