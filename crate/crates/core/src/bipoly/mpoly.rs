//! Sparse exact polynomials in at most four variables over the integers.
//!
//! This is the elimination kernel behind resultants, discriminants and
//! gcd-based squarefree reduction. Rational inputs have their denominators
//! cleared before they enter, so results here are canonical only up to an
//! overall scalar; callers strip content when they need a normal form.
//!
//! Two elimination routes are provided: a symbolic fraction-free Bareiss
//! determinant for small Sylvester matrices, and an evaluation/interpolation
//! route for large ones (the determinant is evaluated at integer parameter
//! values and reconstructed by exact Newton interpolation, which is far
//! cheaper than symbolic elimination when the result has high degree).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Number of variable slots. Convention: 0 = z, 1 = w, 2 and 3 = the
/// parameters of the current elimination (x/y, or axis scalings u, v).
pub(crate) const NVARS: usize = 4;

/// Exponent vector, one slot per variable.
pub(crate) type Expt = [u16; NVARS];

/// Polynomial in [`NVARS`] variables with `BigInt` coefficients, stored as a
/// map from exponent vectors to nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub(crate) struct MPoly {
    terms: BTreeMap<Expt, BigInt>,
}

impl MPoly {
    pub(crate) fn zero() -> Self {
        MPoly::default()
    }

    pub(crate) fn one() -> Self {
        MPoly::constant(BigInt::one())
    }

    pub(crate) fn constant(c: BigInt) -> Self {
        let mut p = MPoly::default();
        if !c.is_zero() {
            p.terms.insert([0; NVARS], c);
        }
        p
    }

    pub(crate) fn var(v: usize) -> Self {
        MPoly::var_pow(v, 1)
    }

    pub(crate) fn var_pow(v: usize, e: u16) -> Self {
        let mut expt = [0u16; NVARS];
        expt[v] = e;
        let mut p = MPoly::default();
        p.terms.insert(expt, BigInt::one());
        p
    }

    pub(crate) fn from_terms(terms: impl IntoIterator<Item = (Expt, BigInt)>) -> Self {
        let mut p = MPoly::default();
        for (e, c) in terms {
            p.insert(e, c);
        }
        p
    }

    fn insert(&mut self, e: Expt, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn terms(&self) -> impl Iterator<Item = (&Expt, &BigInt)> {
        self.terms.iter()
    }

    pub(crate) fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Constant value if the polynomial has no variables, else `None`.
    pub(crate) fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                (*e == [0; NVARS]).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Degree in one variable (0 for the zero polynomial).
    pub(crate) fn degree(&self, v: usize) -> usize {
        self.terms.keys().map(|e| e[v] as usize).max().unwrap_or(0)
    }

    /// Coefficients with respect to `v`, ascending; index = exponent of `v`.
    pub(crate) fn coeffs_wrt(&self, v: usize) -> Vec<MPoly> {
        let mut out = vec![MPoly::zero(); self.degree(v) + 1];
        for (e, c) in &self.terms {
            let mut e2 = *e;
            e2[v] = 0;
            out[e[v] as usize].insert(e2, c.clone());
        }
        out
    }

    pub(crate) fn leading_coeff_wrt(&self, v: usize) -> MPoly {
        let d = self.degree(v) as u16;
        let mut out = MPoly::zero();
        for (e, c) in &self.terms {
            if e[v] == d {
                let mut e2 = *e;
                e2[v] = 0;
                out.insert(e2, c.clone());
            }
        }
        out
    }

    pub(crate) fn derivative(&self, v: usize) -> MPoly {
        let mut out = MPoly::zero();
        for (e, c) in &self.terms {
            if e[v] > 0 {
                let mut e2 = *e;
                e2[v] -= 1;
                out.insert(e2, c * BigInt::from(e[v]));
            }
        }
        out
    }

    /// Substitute the integer `x` for variable `v`.
    pub(crate) fn eval_int_at(&self, v: usize, x: &BigInt) -> MPoly {
        let mut pows = vec![BigInt::one()];
        for _ in 0..self.degree(v) {
            pows.push(pows.last().unwrap() * x);
        }
        let mut out = MPoly::zero();
        for (e, c) in &self.terms {
            let mut e2 = *e;
            e2[v] = 0;
            out.insert(e2, c * &pows[e[v] as usize]);
        }
        out
    }

    pub(crate) fn eval_f64(&self, vals: [f64; NVARS]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = bigint_to_f64(c);
                for v in 0..NVARS {
                    if e[v] > 0 {
                        t *= vals[v].powi(e[v] as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Gcd of all integer coefficients (nonnegative; 0 for the zero poly).
    pub(crate) fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Negated if the lexicographically-leading coefficient is negative.
    pub(crate) fn sign_normalized(&self) -> MPoly {
        match self.terms.iter().next_back() {
            Some((_, c)) if c.is_negative() => -self,
            _ => self.clone(),
        }
    }

    /// Content removed and the lexicographically-leading coefficient made
    /// positive; the canonical representative up to scalars.
    pub(crate) fn primitive_part(&self) -> MPoly {
        if self.is_zero() {
            return MPoly::zero();
        }
        let mut g = self.content();
        if self.terms.iter().next_back().unwrap().1.is_negative() {
            g = -g;
        }
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c / &g))
                .collect(),
        }
    }

    /// Divide out the largest monomial factor (per-variable minimum
    /// exponents).
    pub(crate) fn strip_monomials(&self) -> MPoly {
        if self.is_zero() {
            return MPoly::zero();
        }
        let mut mins = [u16::MAX; NVARS];
        for e in self.terms.keys() {
            for v in 0..NVARS {
                mins[v] = mins[v].min(e[v]);
            }
        }
        if mins == [0; NVARS] {
            return self.clone();
        }
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = *e;
                    for v in 0..NVARS {
                        e2[v] -= mins[v];
                    }
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide exactly.
    pub(crate) fn exact_div(&self, d: &MPoly) -> Option<MPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MPoly::zero());
        }
        if let Some(c) = d.as_constant() {
            if c.is_one() {
                return Some(self.clone());
            }
            let mut out = MPoly::zero();
            for (e, v) in &self.terms {
                let (q, r) = v.div_rem(&c);
                if !r.is_zero() {
                    return None;
                }
                out.insert(*e, q);
            }
            return Some(out);
        }
        // Long division reducing the lex-leading term; exact multiples always
        // stay reducible because lt(r) = lt(q)·lt(d) for the remaining q.
        let (de, dc) = d.terms.iter().next_back().unwrap();
        let mut r = self.clone();
        let mut q = MPoly::zero();
        while !r.is_zero() {
            let (re, rc) = r.terms.iter().next_back().unwrap();
            let mut te = [0u16; NVARS];
            for v in 0..NVARS {
                te[v] = re[v].checked_sub(de[v])?;
            }
            let (tc, rem) = rc.div_rem(dc);
            if rem.is_zero() == false {
                return None;
            }
            let t = MPoly::from_terms([(te, tc)]);
            r = &r - &(&t * d);
            q = &q + &t;
        }
        Some(q)
    }
}

fn bigint_to_f64(c: &BigInt) -> f64 {
    use num::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(*e, c.clone());
        }
        out
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(*e, -c.clone());
        }
        out
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        MPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let mut e = [0u16; NVARS];
                for v in 0..NVARS {
                    e[v] = ea[v] + eb[v];
                }
                out.insert(e, ca * cb);
            }
        }
        out
    }
}

impl std::fmt::Debug for MPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        const NAMES: [&str; NVARS] = ["z", "w", "s", "t"];
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for v in 0..NVARS {
                match e[v] {
                    0 => {}
                    1 => write!(f, "*{}", NAMES[v])?,
                    k => write!(f, "*{}^{}", NAMES[v], k)?,
                }
            }
        }
        Ok(())
    }
}

/// Multivariate gcd by the primitive polynomial remainder sequence,
/// recursing on the highest variable present. Result is primitive with a
/// positive leading coefficient.
pub(crate) fn gcd(a: &MPoly, b: &MPoly) -> MPoly {
    if a.is_zero() {
        return b.sign_normalized();
    }
    if b.is_zero() {
        return a.sign_normalized();
    }
    let v = match (0..NVARS).rev().find(|&v| a.degree(v) > 0 || b.degree(v) > 0) {
        None => {
            return MPoly::constant(
                a.as_constant().unwrap().gcd(&b.as_constant().unwrap()),
            )
        }
        Some(v) => v,
    };
    let ca = content_wrt(a, v);
    let cb = content_wrt(b, v);
    let cont = gcd(&ca, &cb);
    let mut f = a.exact_div(&ca).unwrap();
    let mut g = b.exact_div(&cb).unwrap();
    if f.degree(v) < g.degree(v) {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        if g.as_constant().is_some() {
            // coprime apart from content
            return cont.sign_normalized();
        }
        let r = prem(&f, &g, v);
        if r.is_zero() {
            return (&cont * &primitive_wrt(&g, v)).sign_normalized();
        }
        f = g;
        g = primitive_wrt(&r, v);
    }
}

/// Content of `f` viewed as a polynomial in `v`: the gcd of its
/// `v`-coefficients.
pub(crate) fn content_wrt(f: &MPoly, v: usize) -> MPoly {
    let mut g = MPoly::zero();
    for c in f.coeffs_wrt(v) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.as_constant().map_or(false, |c| c.is_one()) {
            break;
        }
    }
    g
}

fn primitive_wrt(f: &MPoly, v: usize) -> MPoly {
    f.exact_div(&content_wrt(f, v)).unwrap()
}

/// Pseudo-remainder of `f` by `g` in the variable `v`; defined up to factors
/// of the leading coefficient of `g`, which the primitive PRS strips anyway.
fn prem(f: &MPoly, g: &MPoly, v: usize) -> MPoly {
    let n = g.degree(v);
    let lc_g = g.leading_coeff_wrt(v);
    let mut r = f.clone();
    while !r.is_zero() && r.degree(v) >= n {
        let d = r.degree(v);
        let lc_r = r.leading_coeff_wrt(v);
        let shift = &lc_r * &MPoly::var_pow(v, (d - n) as u16);
        r = &(&lc_g * &r) - &(&shift * g);
        debug_assert!(r.is_zero() || r.degree(v) < d);
    }
    r
}

/// Squarefree part: `f` divided by the gcd of `f` with all its partial
/// derivatives, monomial factors stripped, content removed.
pub(crate) fn squarefree_part(f: &MPoly) -> MPoly {
    let f = f.strip_monomials().primitive_part();
    let mut g = f.clone();
    for v in 0..NVARS {
        if f.degree(v) > 0 {
            g = gcd(&g, &f.derivative(v));
        }
    }
    if g.as_constant().is_some() {
        return f;
    }
    f.exact_div(&g).unwrap().primitive_part()
}

/// Resultant of `f` and `g` with respect to `v` as the determinant of the
/// Sylvester matrix (deg g rows of f-coefficients above deg f rows of
/// g-coefficients). `None` if either has degree 0 in `v`.
pub(crate) fn resultant_wrt(f: &MPoly, g: &MPoly, v: usize) -> Option<MPoly> {
    let m = f.degree(v);
    let n = g.degree(v);
    if m == 0 || n == 0 {
        return None;
    }
    let fc = f.coeffs_wrt(v);
    let gc = g.coeffs_wrt(v);
    let size = m + n;
    let mut mat = vec![vec![MPoly::zero(); size]; size];
    for r in 0..n {
        for (k, c) in fc.iter().enumerate() {
            mat[r][r + m - k] = c.clone();
        }
    }
    for r in 0..m {
        for (k, c) in gc.iter().enumerate() {
            mat[n + r][r + n - k] = c.clone();
        }
    }
    Some(bareiss_det(mat))
}

/// Fraction-free determinant; every division is exact.
fn bareiss_det(mut m: Vec<Vec<MPoly>>) -> MPoly {
    let n = m.len();
    let mut flip = false;
    let mut prev = MPoly::one();
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(p) => {
                    m.swap(k, p);
                    flip = !flip;
                }
                None => return MPoly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = t.exact_div(&prev).expect("fraction-free step divides exactly");
            }
            m[i][k] = MPoly::zero();
        }
        prev = m[k][k].clone();
    }
    let det = std::mem::take(&mut m[n - 1][n - 1]);
    if flip {
        -&det
    } else {
        det
    }
}

/// Integer fraction-free determinant.
pub(crate) fn bareiss_det_int(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut flip = false;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(p) => {
                    m.swap(k, p);
                    flip = !flip;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &m[k][k] * &m[i][j] - &m[i][k] * &m[k][j];
                let (q, r) = t.div_rem(&prev);
                debug_assert!(r.is_zero());
                m[i][j] = q;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let det = std::mem::take(&mut m[n - 1][n - 1]);
    if flip {
        -det
    } else {
        det
    }
}

/// Sylvester determinant for coefficient arrays of *generic* degree
/// (`f.len()-1`, `g.len()-1`); leading entries may be zero, so this is the
/// correct specialization of the generic resultant polynomial even where the
/// actual degree drops.
pub(crate) fn sylvester_det_int(f: &[BigInt], g: &[BigInt]) -> BigInt {
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    if size == 0 {
        return BigInt::one();
    }
    let mut mat = vec![vec![BigInt::zero(); size]; size];
    for r in 0..n {
        for (k, c) in f.iter().enumerate() {
            mat[r][r + m - k] = c.clone();
        }
    }
    for r in 0..m {
        for (k, c) in g.iter().enumerate() {
            mat[n + r][r + n - k] = c.clone();
        }
    }
    bareiss_det_int(mat)
}

/// Exact interpolation through `(xs[i], ys[i])` by divided differences;
/// returns monomial coefficients, ascending.
pub(crate) fn interp_1d(xs: &[BigInt], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    let mut dd: Vec<BigRational> = ys.to_vec();
    for k in 1..n {
        for i in (k..n).rev() {
            let denom = BigRational::from(&xs[i] - &xs[i - k]);
            dd[i] = (&dd[i] - &dd[i - 1]) / denom;
        }
    }
    let mut coeffs = vec![dd[n - 1].clone()];
    for i in (0..n - 1).rev() {
        let xi = BigRational::from(xs[i].clone());
        let mut next = vec![BigRational::zero(); coeffs.len() + 1];
        for (j, c) in coeffs.iter().enumerate() {
            next[j + 1] = &next[j + 1] + c;
            next[j] = &next[j] - &(c * &xi);
        }
        next[0] = &next[0] + &dd[i];
        coeffs = next;
    }
    coeffs
}

/// Resultant of `f` and `g` with respect to `elim` when the coefficients
/// involve only the two parameter variables `pa`, `pb`: the Sylvester
/// determinant is evaluated on an integer grid sized by its generic degree
/// bound and reconstructed exactly. Agrees with [`resultant_wrt`] including
/// sign. `None` if either input has degree 0 in `elim`.
pub(crate) fn resultant_by_interp(
    f: &MPoly,
    g: &MPoly,
    elim: usize,
    pa: usize,
    pb: usize,
) -> Option<MPoly> {
    let m = f.degree(elim);
    let n = g.degree(elim);
    if m == 0 || n == 0 {
        return None;
    }
    for v in 0..NVARS {
        debug_assert!(
            v == elim || v == pa || v == pb || (f.degree(v) == 0 && g.degree(v) == 0),
            "inputs must involve only the eliminated and parameter variables"
        );
    }
    let da = n * f.degree(pa) + m * g.degree(pa);
    let db = n * f.degree(pb) + m * g.degree(pb);
    let fc = f.coeffs_wrt(elim);
    let gc = g.coeffs_wrt(elim);
    let xs_a: Vec<BigInt> = (0..=da as i64).map(BigInt::from).collect();
    let xs_b: Vec<BigInt> = (0..=db as i64).map(BigInt::from).collect();

    let det_at = |av: &BigInt, bv: &BigInt| -> BigInt {
        let fv: Vec<BigInt> = fc
            .iter()
            .map(|c| c.eval_int_at(pa, av).eval_int_at(pb, bv).as_constant().unwrap())
            .collect();
        let gv: Vec<BigInt> = gc
            .iter()
            .map(|c| c.eval_int_at(pa, av).eval_int_at(pb, bv).as_constant().unwrap())
            .collect();
        sylvester_det_int(&fv, &gv)
    };

    let rows: Vec<Vec<BigRational>> = xs_a
        .par_iter()
        .map(|av| {
            let vals: Vec<BigRational> = xs_b
                .iter()
                .map(|bv| BigRational::from(det_at(av, bv)))
                .collect();
            interp_1d(&xs_b, &vals)
        })
        .collect();

    let mut out = MPoly::zero();
    for j in 0..=db {
        let col: Vec<BigRational> = rows
            .iter()
            .map(|r| r.get(j).cloned().unwrap_or_else(BigRational::zero))
            .collect();
        for (i, c) in interp_1d(&xs_a, &col).into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            assert!(c.is_integer(), "integer-valued determinant interpolates to integers");
            let mut e = [0u16; NVARS];
            e[pa] = i as u16;
            e[pb] = j as u16;
            out.insert(e, c.to_integer());
        }
    }

    // spot-check one off-grid node against a direct determinant
    let av = BigInt::from(da as i64 + 1);
    let bv = BigInt::from(db as i64 + 1);
    debug_assert_eq!(
        out.eval_int_at(pa, &av).eval_int_at(pb, &bv).as_constant().unwrap(),
        det_at(&av, &bv)
    );
    Some(out)
}
