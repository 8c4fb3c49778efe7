//! Gardner and Miura maps and the Gardner power series.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{AlgebraField, Dealias};

/// `u = r + eps r_x - eps^2/6 r^2`, with the square dealiased.
pub fn gardner_map(r: &AlgebraField, epsilon: f64) -> Result<AlgebraField> {
    if !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be finite"));
    }
    let sq = r.fsquare().dealias(Dealias::TwoThirds);
    r.faxpy(epsilon, &r.spectral_diff(1))?.faxpy(-epsilon * epsilon / 6.0, &sq)
}

/// `u = rh_x - rh^2/6`.
pub fn miura_map(rh: &AlgebraField) -> Result<AlgebraField> {
    let sq = rh.fsquare().dealias(Dealias::TwoThirds);
    rh.spectral_diff(1).faxpy(-1.0 / 6.0, &sq)
}

/// Coefficients `r_0, ..., r_N` of the formal inverse `r = sum eps^n r_n`
/// of the Gardner map.
#[derive(Clone, Debug, PartialEq)]
pub struct GardnerSeries {
    order: usize,
    terms: Vec<AlgebraField>,
}

impl GardnerSeries {
    /// Highest power `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[AlgebraField] {
        &self.terms
    }

    pub fn term(&self, n: usize) -> &AlgebraField {
        &self.terms[n]
    }

    /// Truncated sum `sum_{n <= N} eps^n r_n`.
    pub fn evaluate(&self, epsilon: f64) -> Result<AlgebraField> {
        let mut acc = self.terms[self.order].clone();
        for t in self.terms[..self.order].iter().rev() {
            acc = t.faxpy(epsilon, &acc)?;
        }
        Ok(acc)
    }

    /// `max |u - gardner_map(sum eps^n r_n, eps)|`, which is `O(eps^(N+1))`.
    pub fn resubstitution_residual(&self, epsilon: f64) -> Result<f64> {
        let r = self.evaluate(epsilon)?;
        gardner_map(&r, epsilon)?.max_abs_diff(&self.terms[0])
    }
}

/// Solve `u = r + eps r_x - eps^2/6 r^2` order by order for `n_terms`
/// coefficients (so the series has order `n_terms - 1`):
/// `r_0 = u`, `r_1 = -u_x`, `r_n = -(r_{n-1})_x + 1/6 sum_{a+b=n-2} r_a r_b`.
///
/// The quadratic sum runs over ordered pairs, so each `r_a r_b` with
/// `a != b` appears together with `r_b r_a`; the result is the symmetrized
/// product and does not depend on an ordering convention. Every term is
/// dealiased with the 2/3 rule as it is built.
pub fn gardner_series(u: &AlgebraField, n_terms: usize) -> Result<GardnerSeries> {
    if n_terms == 0 {
        return Err(Error::invalid("n_terms", "must be at least 1"));
    }
    let mut terms: Vec<AlgebraField> = vec![u.clone()];
    for n in 1..n_terms {
        let mut next = terms[n - 1].spectral_diff(1).fscale(-1.0);
        if n >= 2 {
            for a in 0..=n - 2 {
                let b = n - 2 - a;
                next = next.faxpy(1.0 / 6.0, &terms[a].fmul(&terms[b])?)?;
            }
        }
        terms.push(next.dealias(Dealias::TwoThirds));
    }
    Ok(GardnerSeries { order: n_terms - 1, terms })
}

/// `Q_n = int Re(r_n) dx` for `n < n_charges`.
pub fn conserved_charges(u: &AlgebraField, n_charges: usize) -> Result<Vec<f64>> {
    let series = gardner_series(u, n_charges)?;
    Ok(series.terms.iter().map(|t| t.integrate().re()).collect())
}

/// Imaginary parts `int Im(r_n) dx` of the series densities. These are
/// diagnostics only; nothing is claimed about their conservation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImaginaryCandidate {
    pub order: usize,
    pub components: Vec<f64>,
}

pub fn imaginary_charge_candidates(u: &AlgebraField, n_charges: usize) -> Result<Vec<ImaginaryCandidate>> {
    let series = gardner_series(u, n_charges)?;
    Ok(series
        .terms
        .iter()
        .enumerate()
        .map(|(order, t)| ImaginaryCandidate { order, components: t.integrate().im().coeffs()[1..].to_vec() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CdElement;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn field(g: &Grid) -> AlgebraField {
        let w = 2.0 * PI / g.length();
        AlgebraField::from_fn(g, 3, |x| {
            (0..8).map(|m| 0.4 * (w * x + m as f64).sin() + 0.1 * (2.0 * w * x - m as f64).cos()).collect()
        })
        .unwrap()
    }

    #[test]
    fn map_examples() {
        let g = Grid::new(64, 20.0).unwrap();
        let r = field(&g);
        assert_eq!(gardner_map(&r, 0.0).unwrap().max_abs_diff(&r).unwrap(), 0.0);
        let c = AlgebraField::constant(&g, &CdElement::real(3, 2.0));
        let u = gardner_map(&c, 0.5).unwrap();
        assert!((u.at(3).re() - (2.0 - 0.25 / 6.0 * 4.0)).abs() < 1e-14);
        assert_eq!(miura_map(&AlgebraField::zeros(&g, 3)).unwrap().max_abs(), 0.0);
        assert!((miura_map(&c).unwrap().at(0).re() + 4.0 / 6.0).abs() < 1e-14);
        assert!(gardner_map(&r, f64::NAN).is_err());
    }

    #[test]
    fn low_order_terms() {
        let g = Grid::new(64, 20.0).unwrap();
        let u = field(&g);
        let s = gardner_series(&u, 4).unwrap();
        assert_eq!(s.order(), 3);
        assert_eq!(s.term(0), &u);
        let ux = u.spectral_diff(1);
        assert!(s.term(1).max_abs_diff(&ux.fscale(-1.0)).unwrap() < 1e-13);
        let r2 = u.spectral_diff(2).faxpy(1.0 / 6.0, &u.fsquare()).unwrap().dealias(Dealias::TwoThirds);
        assert!(s.term(2).max_abs_diff(&r2).unwrap() < 1e-12);
        let anti = u.fanticommutator(&ux).unwrap();
        let r3 = u.spectral_diff(3).fscale(-1.0).faxpy(-1.0 / 3.0, &anti).unwrap().dealias(Dealias::TwoThirds);
        assert!(s.term(3).max_abs_diff(&r3).unwrap() < 1e-12);
        assert!(gardner_series(&u, 0).is_err());
    }

    #[test]
    fn charge_examples() {
        let g = Grid::new(64, 20.0).unwrap();
        let u = field(&g);
        let q = conserved_charges(&u, 3).unwrap();
        assert!((q[0] - u.integrate().re()).abs() < 1e-14);
        assert!(q[1].abs() < 1e-12);
        let re_sq = g.integrate(u.fsquare().component(0));
        assert!((q[2] - re_sq / 6.0).abs() < 1e-12);
        assert_eq!(imaginary_charge_candidates(&u, 3).unwrap()[1].components.len(), 7);
    }
}
