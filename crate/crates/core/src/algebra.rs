//! Cayley-Dickson algebras: reals, complexes, quaternions, octonions and
//! beyond, as flat coefficient vectors.
//!
//! Doubling convention. An element of level `n + 1` is a pair `(a1, a2)` of
//! level-`n` elements (low half, high half of the coefficient vector) and
//!
//! ```text
//! (a1, a2)(b1, b2) = (a1 b1 - conj(b2) a2,  b2 a1 + a2 conj(b1))
//! ```
//!
//! grounded in real multiplication at level 0. With this convention
//! `e1 e2 = e3`, `e1 e4 = e5` and `e3 e4 = e7` at level 3. The signed
//! multiplication table in [`StructureConstants`] is generated from the
//! recursion and never written by hand; the recursion stays available as
//! [`cd_mul_recursive`] and serves as the reference for the table.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SMatrix};

use crate::error::{Error, Result};

/// Level of the octonions in the doubling tower.
pub const OCTONION_LEVEL: u32 = 3;
/// Real dimension of the octonions.
pub const OCTONION_DIM: usize = 8;
/// Highest level with a cached multiplication table.
pub const MAX_LEVEL: u32 = 6;

pub type OctonionMatrix = SMatrix<f64, 8, 8>;

/// One element of the level-`level` Cayley-Dickson algebra.
///
/// `coeffs[0]` is the real part, `coeffs[i]` multiplies the unit `e_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdElement {
    level: u32,
    coeffs: Vec<f64>,
}

#[inline]
pub fn dim_of(level: u32) -> usize {
    1usize << level
}

impl CdElement {
    pub fn new(level: u32, coeffs: Vec<f64>) -> Result<Self> {
        let expected = dim_of(level);
        if coeffs.len() != expected {
            return Err(Error::BadLength { level, expected, got: coeffs.len() });
        }
        Ok(CdElement { level, coeffs })
    }

    pub fn octonion(coeffs: [f64; 8]) -> Self {
        CdElement { level: OCTONION_LEVEL, coeffs: coeffs.to_vec() }
    }

    pub fn zero(level: u32) -> Self {
        CdElement { level, coeffs: vec![0.0; dim_of(level)] }
    }

    pub fn real(level: u32, x: f64) -> Self {
        let mut e = Self::zero(level);
        e.coeffs[0] = x;
        e
    }

    pub fn one(level: u32) -> Self {
        Self::real(level, 1.0)
    }

    /// The unit `e_i` (`e_0 = 1`).
    ///
    /// Panics if `i` is not below `2^level`.
    pub fn basis(level: u32, i: usize) -> Self {
        assert!(i < dim_of(level), "basis index {i} out of range for level {level}");
        let mut e = Self::zero(level);
        e.coeffs[i] = 1.0;
        e
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn re(&self) -> f64 {
        self.coeffs[0]
    }

    /// Imaginary part as an element (real coefficient zeroed).
    pub fn im(&self) -> Self {
        let mut e = self.clone();
        e.coeffs[0] = 0.0;
        e
    }

    pub fn conj(&self) -> Self {
        CdElement { level: self.level, coeffs: conj_coeffs(&self.coeffs) }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_levels(self, other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_levels(self, other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> Self {
        CdElement { level: self.level, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Product through the precomputed signed table.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        cd_mul(self, other)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        CdElement { level: self.level, coeffs }
    }
}

fn check_levels(a: &CdElement, b: &CdElement) -> Result<()> {
    if a.level != b.level {
        return Err(Error::LevelMismatch(a.level, b.level));
    }
    Ok(())
}

fn conj_coeffs(a: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = a.iter().map(|x| -x).collect();
    c[0] = a[0];
    c
}

/// The doubling rule applied recursively to coefficient slices of equal
/// power-of-two length.
pub fn mul_recursive_coeffs(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 1 {
        return vec![a[0] * b[0]];
    }
    let h = n / 2;
    let (a1, a2) = a.split_at(h);
    let (b1, b2) = b.split_at(h);
    let b1c = conj_coeffs(b1);
    let b2c = conj_coeffs(b2);

    let p = mul_recursive_coeffs(a1, b1);
    let q = mul_recursive_coeffs(&b2c, a2);
    let r = mul_recursive_coeffs(b2, a1);
    let s = mul_recursive_coeffs(a2, &b1c);

    let mut out = Vec::with_capacity(n);
    out.extend(p.iter().zip(&q).map(|(x, y)| x - y));
    out.extend(r.iter().zip(&s).map(|(x, y)| x + y));
    out
}

/// Reference product: the doubling recursion, no table.
pub fn cd_mul_recursive(a: &CdElement, b: &CdElement) -> Result<CdElement> {
    check_levels(a, b)?;
    Ok(CdElement { level: a.level, coeffs: mul_recursive_coeffs(&a.coeffs, &b.coeffs) })
}

/// Cayley-Dickson product using the cached signed table.
pub fn cd_mul(a: &CdElement, b: &CdElement) -> Result<CdElement> {
    check_levels(a, b)?;
    let sc = structure_constants(a.level)?;
    let mut out = vec![0.0; a.dim()];
    sc.mul_into(&a.coeffs, &b.coeffs, &mut out);
    Ok(CdElement { level: a.level, coeffs: out })
}

pub fn cd_conj(a: &CdElement) -> CdElement {
    a.conj()
}

pub fn cd_norm(a: &CdElement) -> f64 {
    a.norm()
}

/// `[a, b] = ab - ba`
pub fn commutator(a: &CdElement, b: &CdElement) -> Result<CdElement> {
    cd_mul(a, b)?.sub(&cd_mul(b, a)?)
}

/// `[a, b, c] = (ab)c - a(bc)`
pub fn associator(a: &CdElement, b: &CdElement, c: &CdElement) -> Result<CdElement> {
    check_levels(a, b)?;
    check_levels(b, c)?;
    let left = cd_mul(&cd_mul(a, b)?, c)?;
    let right = cd_mul(a, &cd_mul(b, c)?)?;
    left.sub(&right)
}

/// Signed multiplication table of the basis units at one level.
///
/// `table[j * dim + k] = (m, sigma)` encodes `e_j e_k = sigma e_m`. The
/// imaginary structure constants `C[j][k][i]` (indices `1..dim`) give the
/// imaginary part of `e_j e_k`, so for the octonions
/// `e_j e_k = -delta_jk + sum_i C_jki e_i`.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    level: u32,
    dim: usize,
    table: Vec<(usize, f64)>,
    c: Vec<f64>,
}

impl StructureConstants {
    /// Build the table by running the doubling recursion on every pair of
    /// basis units.
    pub fn from_recursion(level: u32) -> Self {
        let dim = dim_of(level);
        let mut table = Vec::with_capacity(dim * dim);
        let unit = |i: usize| {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            v
        };
        for j in 0..dim {
            for k in 0..dim {
                let p = mul_recursive_coeffs(&unit(j), &unit(k));
                let (m, sigma) = p
                    .iter()
                    .enumerate()
                    .find(|(_, &x)| x != 0.0)
                    .map(|(m, &x)| (m, x))
                    .expect("product of basis units is a signed unit");
                debug_assert!(sigma == 1.0 || sigma == -1.0);
                table.push((m, sigma));
            }
        }
        let im = dim.saturating_sub(1);
        let mut c = vec![0.0; im * im * im];
        for j in 1..dim {
            for k in 1..dim {
                let (m, sigma) = table[j * dim + k];
                if m != 0 {
                    c[((j - 1) * im + (k - 1)) * im + (m - 1)] = sigma;
                }
            }
        }
        StructureConstants { level, dim, table, c }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(m, sigma)` with `e_j e_k = sigma e_m`.
    #[inline]
    pub fn product(&self, j: usize, k: usize) -> (usize, f64) {
        self.table[j * self.dim + k]
    }

    /// Imaginary structure constant `C_jki` for `j, k, i` in `1..dim`.
    pub fn c(&self, j: usize, k: usize, i: usize) -> f64 {
        let im = self.dim - 1;
        self.c[((j - 1) * im + (k - 1)) * im + (i - 1)]
    }

    /// `out = a b` on coefficient slices.
    #[inline]
    pub fn mul_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            let row = &self.table[j * self.dim..(j + 1) * self.dim];
            for (&(m, sigma), &bk) in row.iter().zip(b) {
                out[m] += sigma * aj * bk;
            }
        }
    }

    pub fn tables_equal(&self, other: &StructureConstants) -> bool {
        self.level == other.level && self.table == other.table
    }
}

/// Cached table for `level` (built on first use).
pub fn structure_constants(level: u32) -> Result<&'static StructureConstants> {
    static TABLES: [OnceLock<StructureConstants>; (MAX_LEVEL + 1) as usize] =
        [const { OnceLock::new() }; (MAX_LEVEL + 1) as usize];
    if level > MAX_LEVEL {
        return Err(Error::Unsupported(format!(
            "level {level} exceeds the largest tabulated level {MAX_LEVEL}"
        )));
    }
    Ok(TABLES[level as usize].get_or_init(|| StructureConstants::from_recursion(level)))
}

fn octonion_table() -> &'static StructureConstants {
    structure_constants(OCTONION_LEVEL).expect("octonion level is tabulated")
}

/// Product of two octonions given as coefficient arrays.
#[inline]
pub fn oct_mul(a: &[f64; 8], b: &[f64; 8]) -> [f64; 8] {
    let mut out = [0.0; 8];
    octonion_table().mul_into(a, b, &mut out);
    out
}

fn require_octonion(x: &CdElement, what: &str) -> Result<()> {
    if x.level != OCTONION_LEVEL {
        return Err(Error::Unsupported(format!(
            "{what} is only defined for octonions (level 3), got level {}",
            x.level
        )));
    }
    Ok(())
}

/// `D_{a,b}(x) = [[a,b],x] - 3 [a,b,x]`, a derivation of the octonions.
pub fn derivation(a: &CdElement, b: &CdElement, x: &CdElement) -> Result<CdElement> {
    require_octonion(a, "derivation")?;
    require_octonion(b, "derivation")?;
    require_octonion(x, "derivation")?;
    let ab = commutator(a, b)?;
    commutator(&ab, x)?.sub(&associator(a, b, x)?.scale(3.0))
}

/// Matrix of `x -> D_{a,b}(x)` on octonion coefficients (column `k` is
/// `D_{a,b}(e_k)`).
pub fn derivation_matrix(a: &CdElement, b: &CdElement) -> Result<OctonionMatrix> {
    require_octonion(a, "derivation")?;
    require_octonion(b, "derivation")?;
    let mut m = OctonionMatrix::zeros();
    for k in 0..OCTONION_DIM {
        let col = derivation(a, b, &CdElement::basis(OCTONION_LEVEL, k))?;
        for (r, &v) in col.coeffs().iter().enumerate() {
            m[(r, k)] = v;
        }
    }
    Ok(m)
}

pub fn basis_derivation_matrix(i: usize, j: usize) -> OctonionMatrix {
    derivation_matrix(
        &CdElement::basis(OCTONION_LEVEL, i),
        &CdElement::basis(OCTONION_LEVEL, j),
    )
    .expect("basis units are octonions")
}

/// All 21 pairs `(i, j)` with `1 <= i < j <= 7`.
pub fn imaginary_pairs() -> Vec<(usize, usize)> {
    (1..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).collect()
}

/// Relative threshold on singular values used for numerical ranks.
pub const RANK_TOL: f64 = 1e-9;

pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Rank of the span of `D_{e_i, e_j}` over the given pairs, each map
/// flattened to a 64-vector.
pub fn derivation_span_rank(pairs: &[(usize, usize)]) -> usize {
    let mut rows = DMatrix::zeros(pairs.len(), 64);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let d = basis_derivation_matrix(i, j);
        for (c, v) in d.iter().enumerate() {
            rows[(r, c)] = *v;
        }
    }
    numerical_rank(&rows, RANK_TOL)
}

/// Rank of the span of all 21 basis derivations (14 for g2).
pub fn derivation_basis_rank() -> usize {
    derivation_span_rank(&imaginary_pairs())
}

/// An orthonormal basis (in the Frobenius inner product) of the derivation
/// algebra, extracted from the 21 basis derivations.
pub fn derivation_algebra_basis() -> Vec<OctonionMatrix> {
    let pairs = imaginary_pairs();
    let mut rows = DMatrix::zeros(pairs.len(), 64);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let d = basis_derivation_matrix(i, j);
        for (c, v) in d.iter().enumerate() {
            rows[(r, c)] = *v;
        }
    }
    let svd = rows.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_TOL * smax)
        .map(|(r, _)| OctonionMatrix::from_iterator(vt.row(r).iter().cloned()))
        .collect()
}

/// A linear map on octonion coefficients, typically `exp(t D)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Automorphism {
    matrix: OctonionMatrix,
}

impl Automorphism {
    pub fn identity() -> Self {
        Automorphism { matrix: OctonionMatrix::identity() }
    }

    pub fn from_matrix(matrix: OctonionMatrix) -> Self {
        Automorphism { matrix }
    }

    pub fn matrix(&self) -> &OctonionMatrix {
        &self.matrix
    }

    #[inline]
    pub fn apply_coeffs(&self, x: &[f64; 8]) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..8).map(|c| self.matrix[(r, c)] * x[c]).sum();
        }
        out
    }

    pub fn apply(&self, x: &CdElement) -> Result<CdElement> {
        require_octonion(x, "automorphism")?;
        let mut a = [0.0; 8];
        a.copy_from_slice(x.coeffs());
        Ok(CdElement::octonion(self.apply_coeffs(&a)))
    }
}

/// `phi = exp(t D_{a,b})`.
pub fn automorphism_exp(a: &CdElement, b: &CdElement, t: f64) -> Result<Automorphism> {
    let d = derivation_matrix(a, b)?;
    Ok(Automorphism { matrix: (d * t).exp() })
}

/// Search for a pair of nonzero elements of the form `e_a +/- e_b` whose
/// product vanishes. Such pairs exist from level 4 (sedenions) upward and
/// never in a division algebra.
pub fn find_zero_divisor(level: u32) -> Result<Option<(CdElement, CdElement)>> {
    let sc = structure_constants(level)?;
    let dim = sc.dim();
    let mut candidates = Vec::new();
    for a in 1..dim {
        for b in a + 1..dim {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[a] = 1.0;
                v[b] = s;
                candidates.push(v);
            }
        }
    }
    let mut out = vec![0.0; dim];
    for x in &candidates {
        for y in &candidates {
            sc.mul_into(x, y, &mut out);
            if out.iter().all(|&c| c == 0.0) {
                return Ok(Some((
                    CdElement::new(level, x.clone())?,
                    CdElement::new(level, y.clone())?,
                )));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(i: usize) -> CdElement {
        CdElement::basis(3, i)
    }

    fn random(level: u32, rng: &mut ChaCha8Rng) -> CdElement {
        CdElement::new(level, (0..dim_of(level)).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    // Independent nested-pair construction: complex -> quaternion -> octonion,
    // each level written out by hand with the same doubling formula.
    mod nested {
        #[derive(Clone, Copy)]
        pub struct C(pub f64, pub f64);
        impl C {
            fn mul(self, o: C) -> C {
                C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
            }
            fn conj(self) -> C {
                C(self.0, -self.1)
            }
            fn sub(self, o: C) -> C {
                C(self.0 - o.0, self.1 - o.1)
            }
            fn add(self, o: C) -> C {
                C(self.0 + o.0, self.1 + o.1)
            }
        }
        #[derive(Clone, Copy)]
        pub struct Q(pub C, pub C);
        impl Q {
            fn mul(self, o: Q) -> Q {
                Q(self.0.mul(o.0).sub(o.1.conj().mul(self.1)), o.1.mul(self.0).add(self.1.mul(o.0.conj())))
            }
            fn conj(self) -> Q {
                Q(self.0.conj(), C(-self.1 .0, -self.1 .1))
            }
            fn sub(self, o: Q) -> Q {
                Q(self.0.sub(o.0), self.1.sub(o.1))
            }
            fn add(self, o: Q) -> Q {
                Q(self.0.add(o.0), self.1.add(o.1))
            }
        }
        #[derive(Clone, Copy)]
        pub struct O(pub Q, pub Q);
        impl O {
            pub fn mul(self, o: O) -> O {
                O(self.0.mul(o.0).sub(o.1.conj().mul(self.1)), o.1.mul(self.0).add(self.1.mul(o.0.conj())))
            }
            pub fn from(c: &[f64]) -> O {
                O(Q(C(c[0], c[1]), C(c[2], c[3])), Q(C(c[4], c[5]), C(c[6], c[7])))
            }
            pub fn coeffs(self) -> [f64; 8] {
                let O(Q(a, b), Q(c, d)) = self;
                [a.0, a.1, b.0, b.1, c.0, c.1, d.0, d.1]
            }
        }
    }

    #[test]
    fn table_matches_nested_pair_construction() {
        for j in 0..8 {
            for k in 0..8 {
                let ours = cd_mul(&e(j), &e(k)).unwrap();
                let theirs = nested::O::from(e(j).coeffs()).mul(nested::O::from(e(k).coeffs()));
                assert_eq!(ours.coeffs(), &theirs.coeffs()[..], "e{j} e{k}");
            }
        }
    }

    #[test]
    fn frozen_table_entries() {
        // values computed with the nested-pair construction above
        assert_eq!(cd_mul(&e(1), &e(2)).unwrap(), e(3));
        assert_eq!(cd_mul(&e(2), &e(1)).unwrap(), e(3).scale(-1.0));
        assert_eq!(cd_mul(&e(1), &e(4)).unwrap(), e(5));
        assert_eq!(cd_mul(&e(3), &e(4)).unwrap(), e(7));
        assert_eq!(cd_mul(&e(1), &e(6)).unwrap(), e(7).scale(-1.0));
        assert_eq!(cd_mul(&e(6), &e(7)).unwrap(), e(1).scale(-1.0));
    }

    #[test]
    fn unit_and_squares() {
        assert_eq!(cd_mul(&CdElement::one(3), &e(5)).unwrap(), e(5));
        for level in 1..=4 {
            for i in 1..dim_of(level) {
                let b = CdElement::basis(level, i);
                assert_eq!(cd_mul(&b, &b).unwrap(), CdElement::real(level, -1.0));
            }
        }
    }

    #[test]
    fn level_mismatch_is_rejected() {
        let a = CdElement::one(2);
        let b = CdElement::one(3);
        assert!(matches!(cd_mul(&a, &b), Err(Error::LevelMismatch(2, 3))));
        assert!(matches!(commutator(&a, &b), Err(Error::LevelMismatch(..))));
        assert!(CdElement::new(3, vec![0.0; 7]).is_err());
    }

    #[test]
    fn conj_and_norm_examples() {
        let x = CdElement::one(3).add(&e(1)).unwrap();
        assert_eq!(x.conj(), CdElement::one(3).sub(&e(1)).unwrap());
        assert!((x.norm() - 2f64.sqrt()).abs() < 1e-15);
        let y = CdElement::one(3).add(&e(2)).unwrap();
        let p = cd_mul(&x, &y).unwrap();
        // (1 + e1)(1 + e2) = 1 + e1 + e2 + e3
        assert_eq!(p.coeffs(), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((p.norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn commutator_examples() {
        assert!(commutator(&e(1), &e(1)).unwrap().is_zero());
        assert_eq!(commutator(&e(1), &e(2)).unwrap(), e(3).scale(2.0));
    }

    #[test]
    fn associator_witness_only_from_octonions() {
        for level in 0..=3u32 {
            let dim = dim_of(level);
            let mut nonzero = 0;
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        let b = |n| CdElement::basis(level, n);
                        if !associator(&b(i), &b(j), &b(k)).unwrap().is_zero() {
                            nonzero += 1;
                        }
                    }
                }
            }
            if level <= 2 {
                assert_eq!(nonzero, 0, "level {level} is associative");
            } else {
                assert!(nonzero > 0);
            }
        }
        // e1, e2, e4 generate the whole octonion algebra
        assert!(!associator(&e(1), &e(2), &e(4)).unwrap().is_zero());
    }

    #[test]
    fn derivation_examples() {
        assert!(derivation(&e(1), &e(2), &CdElement::one(3)).unwrap().is_zero());
        // [[e1,e2],e1] = [2 e3, e1] = 4 e2 and [e1,e2,e1] = 0
        assert_eq!(derivation(&e(1), &e(2), &e(1)).unwrap(), e(2).scale(4.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random(3, &mut rng);
            for (i, j) in imaginary_pairs() {
                assert_eq!(derivation(&e(i), &e(j), &x).unwrap().re(), 0.0);
            }
        }
    }

    #[test]
    fn derivation_requires_octonions() {
        let q = CdElement::basis(2, 1);
        assert!(matches!(derivation(&q, &q, &q), Err(Error::Unsupported(_))));
    }

    #[test]
    fn derivation_ranks() {
        assert_eq!(derivation_basis_rank(), 14);
        assert!(derivation_span_rank(&[(1, 2), (1, 3), (2, 3)]) <= 3);
        assert_eq!(derivation_span_rank(&[(1, 2)]), 1);
        assert_eq!(derivation_algebra_basis().len(), 14);
    }

    #[test]
    fn automorphism_examples() {
        let phi0 = automorphism_exp(&e(1), &e(2), 0.0).unwrap();
        assert_eq!(phi0, Automorphism::identity());

        let phi = automorphism_exp(&e(2), &e(5), 0.7).unwrap();
        let one = phi.apply(&CdElement::one(3)).unwrap();
        assert!(one.sub(&CdElement::one(3)).unwrap().max_abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = random(3, &mut rng);
            let y = random(3, &mut rng);
            let lhs = phi.apply(&cd_mul(&x, &y).unwrap()).unwrap();
            let rhs = cd_mul(&phi.apply(&x).unwrap(), &phi.apply(&y).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
            assert!((phi.apply(&x).unwrap().norm() - x.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_constants_are_totally_antisymmetric() {
        let sc = structure_constants(3).unwrap();
        for j in 1..8 {
            for k in 1..8 {
                for i in 1..8 {
                    let c = sc.c(j, k, i);
                    assert_eq!(c, -sc.c(k, j, i));
                    assert_eq!(c, -sc.c(j, i, k));
                    assert_eq!(c, -sc.c(i, k, j));
                }
            }
        }
    }

    #[test]
    fn sedenions_have_zero_divisors_octonions_do_not() {
        assert!(find_zero_divisor(3).unwrap().is_none());
        let (x, y) = find_zero_divisor(4).unwrap().expect("sedenion zero divisor");
        assert!(x.norm() > 0.0 && y.norm() > 0.0);
        assert!(cd_mul(&x, &y).unwrap().is_zero());
    }

    #[test]
    fn unsupported_level() {
        assert!(structure_constants(MAX_LEVEL + 1).is_err());
    }
}
