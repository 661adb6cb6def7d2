//! Exact and floating-point bivariate polynomial arithmetic.
//!
//! [`BiPoly`] is a Laurent polynomial in (z, w) with exact rational
//! coefficients and a cached float view; [`UniPoly`] is a dense univariate
//! complex polynomial with an Aberth–Ehrlich root finder. The exact
//! multivariate kernel behind resultants lives in [`mpoly`].

pub(crate) mod mpoly;
mod unipoly;

pub use unipoly::UniPoly;

use crate::error::{Error, Result};
use mpoly::MPoly;
use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Which variable an elimination removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    Z,
    W,
}

/// Laurent polynomial in (z, w) over the rationals, with a cached float view
/// used by all numeric evaluation.
#[derive(Clone, Default)]
pub struct BiPoly {
    terms: BTreeMap<(i32, i32), BigRational>,
    fterms: Vec<(i32, i32, f64)>,
}

impl PartialEq for BiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for BiPoly {}

impl BiPoly {
    pub fn from_terms(terms: impl IntoIterator<Item = ((i32, i32), BigRational)>) -> Self {
        let mut map: BTreeMap<(i32, i32), BigRational> = BTreeMap::new();
        for (e, c) in terms {
            if c.is_zero() {
                continue;
            }
            let slot = map.entry(e).or_insert_with(BigRational::zero);
            *slot += c;
            if slot.is_zero() {
                map.remove(&e);
            }
        }
        let fterms = map
            .iter()
            .map(|(&(i, j), c)| (i, j, rational_to_f64(c)))
            .collect();
        BiPoly { terms: map, fterms }
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_int_terms(terms: &[(i32, i32, i64)]) -> Self {
        Self::from_terms(
            terms
                .iter()
                .map(|&(i, j, c)| ((i, j), BigRational::from(BigInt::from(c)))),
        )
    }

    /// Floats are promoted to the exact rational each double represents.
    pub fn from_f64_terms(terms: &[(i32, i32, f64)]) -> Self {
        Self::from_terms(terms.iter().filter_map(|&(i, j, c)| {
            BigRational::from_float(c).map(|r| ((i, j), r))
        }))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i32, i32), &BigRational)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    pub fn f64_terms(&self) -> &[(i32, i32, f64)] {
        &self.fterms
    }

    pub fn coeff(&self, i: i32, j: i32) -> BigRational {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    /// The same polynomial with the roles of z and w swapped.
    pub(crate) fn transposed(&self) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|(&(i, j), c)| ((j, i), c.clone())))
    }

    /// z ∂/∂z, which keeps Laurent support.
    pub fn z_dz(&self) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|(&(i, j), c)| {
            ((i, j), c * BigRational::from(BigInt::from(i)))
        }))
    }

    /// w ∂/∂w.
    pub fn w_dw(&self) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|(&(i, j), c)| {
            ((i, j), c * BigRational::from(BigInt::from(j)))
        }))
    }

    pub fn scale(&self, s: &BigRational) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|(&e, c)| (e, c * s)))
    }

    /// Value and both first partials at a point, from the float cache.
    ///
    /// Accurate to ~1e-13 relative error per term; use the exact terms for
    /// anything sharper.
    pub fn eval_and_derivs(
        &self,
        z: Complex64,
        w: Complex64,
    ) -> Result<(Complex64, Complex64, Complex64)> {
        let (zmin, wmin) = self.min_exponents();
        if z.is_zero() && zmin < 0 {
            return Err(Error::Domain(
                "Laurent polynomial with negative z-exponents evaluated at z=0".into(),
            ));
        }
        if w.is_zero() && wmin < 0 {
            return Err(Error::Domain(
                "Laurent polynomial with negative w-exponents evaluated at w=0".into(),
            ));
        }
        let mut val = Complex64::zero();
        let mut dz = Complex64::zero();
        let mut dw = Complex64::zero();
        for &(i, j, c) in &self.fterms {
            let zi = z.powi(i);
            let wj = w.powi(j);
            val += c * zi * wj;
            if i != 0 {
                dz += c * i as f64 * z.powi(i - 1) * wj;
            }
            if j != 0 {
                dw += c * j as f64 * zi * w.powi(j - 1);
            }
        }
        Ok((val, dz, dw))
    }

    /// Per-variable minimum exponents over the support (0 for the zero
    /// polynomial).
    pub fn min_exponents(&self) -> (i32, i32) {
        let zmin = self.terms.keys().map(|&(i, _)| i).min().unwrap_or(0);
        let wmin = self.terms.keys().map(|&(_, j)| j).min().unwrap_or(0);
        (zmin, wmin)
    }

    pub fn max_exponents(&self) -> (i32, i32) {
        let zmax = self.terms.keys().map(|&(i, _)| i).max().unwrap_or(0);
        let wmax = self.terms.keys().map(|&(_, j)| j).max().unwrap_or(0);
        (zmax, wmax)
    }

    /// Convex hull of the exponent support, counterclockwise, starting at
    /// the lexicographically smallest vertex.
    pub fn newton_polygon(&self) -> Vec<(i64, i64)> {
        convex_hull(
            self.terms
                .keys()
                .map(|&(i, j)| (i as i64, j as i64))
                .collect(),
        )
    }

    /// The polynomial representative: the Laurent normalization z^{-a}w^{-b}·p
    /// with denominators cleared, where (a, b) are the negative parts of the
    /// minimum exponents (positive monomial factors are kept). Returns the
    /// integer polynomial, the shift (a, b), and the cleared denominator d,
    /// so that p = poly · z^a w^b / d exactly.
    pub(crate) fn cleared(&self) -> (MPoly, (i32, i32), BigInt) {
        let (zmin, wmin) = self.min_exponents();
        let (a, b) = (zmin.min(0), wmin.min(0));
        let mut denom = BigInt::one();
        for c in self.terms.values() {
            denom = num::Integer::lcm(&denom, c.denom());
        }
        let poly = MPoly::from_terms(self.terms.iter().map(|(&(i, j), c)| {
            let mut e = [0u16; mpoly::NVARS];
            e[0] = (i - a) as u16;
            e[1] = (j - b) as u16;
            (e, c.numer() * &denom / c.denom())
        }));
        (poly, (a, b), denom)
    }

    /// Degrees of the polynomial representative (negative exponents lifted).
    pub fn poly_degrees(&self) -> (usize, usize) {
        let (zmin, wmin) = self.min_exponents();
        let (zmax, wmax) = self.max_exponents();
        (
            (zmax - zmin.min(0)) as usize,
            (wmax - wmin.min(0)) as usize,
        )
    }

    /// Resultant with respect to the eliminated variable, taken on the
    /// polynomial representatives: the Sylvester determinant via
    /// fraction-free Bareiss elimination. Returns the primitive integer
    /// polynomial in the kept variable and the removed content, so that
    /// content · primitive is the exact determinant (scaled by the cleared
    /// denominators, whose powers are folded into the content).
    pub fn resultant(p: &BiPoly, q: &BiPoly, eliminate: Variable) -> Result<(UniPolyExact, BigRational)> {
        let (fp, _, dp) = p.cleared();
        let (fq, _, dq) = q.cleared();
        let v = match eliminate {
            Variable::Z => 0,
            Variable::W => 1,
        };
        let m = fp.degree(v);
        let n = fq.degree(v);
        if m == 0 || n == 0 {
            return Err(Error::DegenerateInput(format!(
                "resultant needs positive degree in the eliminated variable (got {m} and {n})"
            )));
        }
        let r = mpoly::resultant_wrt(&fp, &fq, v).unwrap();
        let kept = 1 - v;
        let coeffs_m = r.coeffs_wrt(kept);
        // denominators scale the determinant by dp^n dq^m
        let scale = BigRational::new(BigInt::one(), dp.pow(n as u32) * dq.pow(m as u32));
        if r.is_zero() {
            return Ok((UniPolyExact { coeffs: vec![] }, BigRational::zero()));
        }
        let mut content = r.content();
        let lead = coeffs_m
            .last()
            .and_then(|c| c.as_constant())
            .unwrap_or_else(BigInt::zero);
        if lead.is_negative() {
            content = -content;
        }
        let coeffs: Vec<BigInt> = coeffs_m
            .iter()
            .map(|c| c.as_constant().expect("resultant is univariate") / &content)
            .collect();
        Ok((
            UniPolyExact { coeffs },
            BigRational::from(content) * scale,
        ))
    }
}

fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

impl Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: &BiPoly) -> BiPoly {
        BiPoly::from_terms(
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|(&e, c)| (e, c.clone())),
        )
    }
}

impl Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, rhs: &BiPoly) -> BiPoly {
        self + &-rhs
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|(&e, c)| (e, -c.clone())))
    }
}

impl Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: &BiPoly) -> BiPoly {
        let mut acc: Vec<((i32, i32), BigRational)> = Vec::new();
        for ((ia, ja), ca) in self.terms.iter() {
            for ((ib, jb), cb) in rhs.terms.iter() {
                acc.push(((ia + ib, ja + jb), ca * cb));
            }
        }
        BiPoly::from_terms(acc)
    }
}

impl std::fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((i, j), c) in self.terms.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if *i != 0 {
                write!(f, "*z^{i}")?;
            }
            if *j != 0 {
                write!(f, "*w^{j}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for BiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            terms: &'a [(i32, i32, String)],
        }
        let terms: Vec<(i32, i32, String)> = self
            .terms
            .iter()
            .map(|(&(i, j), c)| (i, j, format!("{}/{}", c.numer(), c.denom())))
            .collect();
        Repr { terms: &terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            terms: Vec<(i32, i32, String)>,
        }
        let repr = Repr::deserialize(d)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for (i, j, s) in repr.terms {
            let c: BigRational = s
                .parse()
                .map_err(|e| D::Error::custom(format!("bad rational {s:?}: {e}")))?;
            terms.push(((i, j), c));
        }
        Ok(BiPoly::from_terms(terms))
    }
}

/// Primitive integer univariate polynomial (exact resultant output),
/// ascending coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPolyExact {
    pub coeffs: Vec<BigInt>,
}

impl UniPolyExact {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn to_float(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0))
                .collect(),
        )
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + BigRational::from(c.clone());
        }
        acc
    }
}

/// Convex hull by monotone chain, counterclockwise, starting at the
/// lexicographically smallest point. Segments keep both endpoints; interior
/// and edge-collinear points are dropped.
pub(crate) fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line() -> BiPoly {
        BiPoly::from_int_terms(&[(1, 0, 1), (0, 1, 1), (0, 0, -1)])
    }

    fn fortress() -> BiPoly {
        BiPoly::from_int_terms(&[(0, 0, 5), (1, 0, 1), (-1, 0, 1), (0, 1, 1), (0, -1, 1)])
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_line_at_axis_point() {
        let (v, dz, dw) = line().eval_and_derivs(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!((v, dz, dw), (c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)));
    }

    #[test]
    fn eval_fortress_at_unit_point() {
        let (v, dz, dw) = fortress().eval_and_derivs(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((v - c(9.0, 0.0)).norm() < 1e-14);
        assert!(dz.norm() < 1e-14 && dw.norm() < 1e-14);
    }

    #[test]
    fn eval_rejects_laurent_at_zero() {
        assert!(matches!(
            fortress().eval_and_derivs(c(0.0, 0.0), c(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
        // a true polynomial is fine at the origin
        assert!(line().eval_and_derivs(c(0.0, 0.0), c(0.0, 0.0)).is_ok());
    }

    #[test]
    fn newton_polygons() {
        assert_eq!(line().newton_polygon(), vec![(0, 0), (1, 0), (0, 1)]);
        assert_eq!(
            fortress().newton_polygon(),
            vec![(-1, 0), (0, -1), (1, 0), (0, 1)]
        );
        assert_eq!(
            BiPoly::from_int_terms(&[(0, 0, 7)]).newton_polygon(),
            vec![(0, 0)]
        );
        // collinear support keeps only the endpoints
        assert_eq!(
            BiPoly::from_int_terms(&[(1, 0, 1), (2, 0, 3), (3, 0, 1)]).newton_polygon(),
            vec![(1, 0), (3, 0)]
        );
    }

    #[test]
    fn resultant_linear_elimination() {
        let q = BiPoly::from_int_terms(&[(1, 0, 1), (0, 1, -1)]);
        let (r, content) = BiPoly::resultant(&line(), &q, Variable::W).unwrap();
        assert_eq!(r.coeffs, vec![BigInt::from(-1), BigInt::from(2)]);
        assert_eq!(content, BigRational::one());
    }

    #[test]
    fn resultant_root_product() {
        let f = BiPoly::from_int_terms(&[(0, 2, 1), (1, 0, -1)]);
        let g = BiPoly::from_int_terms(&[(0, 1, 1)]);
        let (r, content) = BiPoly::resultant(&f, &g, Variable::W).unwrap();
        // −z, reported as content −1 times primitive z
        assert_eq!(r.coeffs, vec![BigInt::from(0), BigInt::from(1)]);
        assert_eq!(content, -BigRational::one());
    }

    #[test]
    fn resultant_reports_content() {
        // Res_w(2z+2w−2, z−w) = 4z−2 = 2·(2z−1)
        let p = BiPoly::from_int_terms(&[(1, 0, 2), (0, 1, 2), (0, 0, -2)]);
        let q = BiPoly::from_int_terms(&[(1, 0, 1), (0, 1, -1)]);
        let (r, content) = BiPoly::resultant(&p, &q, Variable::W).unwrap();
        assert_eq!(r.coeffs, vec![BigInt::from(-1), BigInt::from(2)]);
        assert_eq!(content, BigRational::from(BigInt::from(2)));
    }

    #[test]
    fn resultant_degenerate_input() {
        let q = BiPoly::from_int_terms(&[(1, 0, 1)]);
        assert!(matches!(
            BiPoly::resultant(&line(), &q, Variable::W),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn serialization_roundtrip() {
        let p = BiPoly::from_terms([
            ((-1, 0), BigRational::new(BigInt::from(3), BigInt::from(2))),
            ((2, -3), BigRational::from(BigInt::from(-7))),
        ]);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"3/2\""));
        let back: BiPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    /// Exact complex-rational evaluation oracle for the float cache.
    #[derive(Clone)]
    struct QC {
        re: BigRational,
        im: BigRational,
    }

    impl QC {
        fn new(re: BigRational, im: BigRational) -> Self {
            QC { re, im }
        }
        fn mul(&self, o: &QC) -> QC {
            QC::new(
                &self.re * &o.re - &self.im * &o.im,
                &self.re * &o.im + &self.im * &o.re,
            )
        }
        fn add(&self, o: &QC) -> QC {
            QC::new(&self.re + &o.re, &self.im + &o.im)
        }
        fn powu(&self, e: u32) -> QC {
            let mut acc = QC::new(BigRational::one(), BigRational::zero());
            for _ in 0..e {
                acc = acc.mul(self);
            }
            acc
        }
        fn to_c64(&self) -> Complex64 {
            c(rational_to_f64(&self.re), rational_to_f64(&self.im))
        }
    }

    #[test]
    fn float_eval_matches_exact_rational_oracle() {
        // degree-6 polynomial with awkward rational coefficients
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let p = BiPoly::from_terms([
            ((0, 0), q(1, 3)),
            ((1, 2), q(-7, 5)),
            ((3, 3), q(22, 7)),
            ((6, 0), q(-1, 9)),
            ((2, 4), q(5, 11)),
            ((0, 5), q(13, 8)),
        ]);
        let z = QC::new(q(3, 4), q(-2, 5));
        let w = QC::new(q(-1, 2), q(7, 6));
        let mut exact = QC::new(BigRational::zero(), BigRational::zero());
        for ((i, j), cf) in p.terms() {
            let t = z.powu(i as u32).mul(&w.powu(j as u32));
            exact = exact.add(&QC::new(&t.re * cf, &t.im * cf));
        }
        let (v, _, _) = p.eval_and_derivs(z.to_c64(), w.to_c64()).unwrap();
        let want = exact.to_c64();
        assert!((v - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }

    fn minkowski_hull(a: &[(i64, i64)], b: &[(i64, i64)]) -> Vec<(i64, i64)> {
        let mut sums = Vec::new();
        for &p in a {
            for &q in b {
                sums.push((p.0 + q.0, p.1 + q.1));
            }
        }
        convex_hull(sums)
    }

    fn sparse_bipoly() -> impl Strategy<Value = BiPoly> {
        proptest::collection::vec(((-3i32..=4, -3i32..=4), -5i64..=5), 1..6).prop_map(|ts| {
            BiPoly::from_terms(ts.into_iter().filter(|&(_, c)| c != 0).map(|((i, j), c)| {
                ((i, j), BigRational::from(BigInt::from(c)))
            }))
        })
    }

    proptest! {
        #[test]
        fn newton_polygon_of_product_is_minkowski_sum(
            a in sparse_bipoly(),
            b in sparse_bipoly(),
        ) {
            prop_assume!(!a.is_zero() && !b.is_zero());
            let prod = &a * &b;
            // over a field the product is nonzero, so the hull identity holds
            prop_assert!(!prod.is_zero());
            prop_assert_eq!(
                prod.newton_polygon(),
                minkowski_hull(&a.newton_polygon(), &b.newton_polygon())
            );
        }
    }
}
