//! Pointwise solver for the characteristic system of a scene.
//!
//! A scene couples the spectral curve P(z, w) = 0 with a second algebraic
//! equation that carries the spatial point: for a volume weight c ≠ 0 it is
//! Q(e^{-cx} z, e^{-cy} w) = 0, and at c = 0 it is a polynomial identity
//! G(z, w, x, y) = 0, typically x z P_z + y w P_w = Q0(z, w). A point is
//! liquid when the system has a conjugate pair of solutions that are not
//! both real; the member with Im(w P_w / (z P_z)) > 0 is the one whose
//! arguments carry the height gradient (arg w, -arg z)/π up to lattice
//! shifts. Points without such a pair are frozen or gas, told apart by
//! whether axis-parallel rays escape to infinity without meeting liquid.
//!
//! The two equations are reduced once per scene to a single eliminant in z
//! whose coefficients are polynomials in the spatial symbols; each query
//! then specializes the eliminant, finds its roots, recovers w along the
//! curve fiber, and polishes candidate pairs with a coupled Newton step.

use crate::bipoly::{BiPoly, UniPoly};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num::complex::Complex64;
use num::Zero;
use std::f64::consts::{PI, TAU};

/// Default residual bound for |P| and the second equation at liquid points.
const RESIDUAL_TOL: f64 = 1e-10;
/// Default relative imaginary-part threshold below which a value is real.
const REAL_TOL: f64 = 1e-9;
/// Relative accuracy demanded of the coupled Newton polish.
const POLISH_TOL: f64 = 1e-13;
/// Roots below this modulus sit on the torus degeneration and are dropped.
const ROOT_MIN_MODULUS: f64 = 1e-10;
/// Roots above this modulus are tentacle artifacts and are dropped.
const ROOT_MAX_MODULUS: f64 = 1e10;
/// Slack on Newton polygon membership for reported gradients.
const POLYGON_TOL: f64 = 1e-9;
/// Bound on |c·x| so the exponential substitution stays in f64 range.
const EXP_ARG_LIMIT: f64 = 300.0;
/// Spatial step of the coarse ray march used to classify real points.
const RAY_STEP: f64 = 0.05;
/// Distance the coarse ray march covers before switching to doubling.
const RAY_DENSE_RANGE: f64 = 2.0;
/// Farthest probe distance; no liquid out to here counts as an escape.
const RAY_MAX_RANGE: f64 = 16.0;

/// Thermodynamic phase of a spatial point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// The characteristic pair is genuinely complex; the height function is
    /// curved here.
    Liquid,
    /// All solutions are real and some axis ray escapes to infinity without
    /// meeting liquid; the height is a facet of the given slope.
    Frozen { slope: (i64, i64) },
    /// All solutions are real (or absent) but liquid surrounds the point in
    /// all four axis directions; the facet slope is the interior lattice
    /// point labelling the bubble.
    Gas { bubble: (i64, i64) },
}

/// One solved spatial point: the characteristic pair, its rescaled
/// counterpart, the height gradient, and the phase.
///
/// For frozen and gas points `z`, `w` hold a representative real solution
/// (NaN when none exists) and `grad` holds the facet slope.
#[derive(Clone, Debug)]
pub struct LiquidSample {
    pub x: f64,
    pub y: f64,
    pub z: Complex64,
    pub w: Complex64,
    pub zeta: Complex64,
    pub omega: Complex64,
    pub grad: (f64, f64),
    pub phase: Phase,
}

/// How the solution branch is selected among conjugates. A single rule is
/// supported; the enum records the convention in configurations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BranchRule {
    /// Keep the member of each conjugate pair with Im(w P_w / (z P_z)) > 0.
    #[default]
    Orientation,
}

/// Solver settings shared by every query against one scene.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Volume weight; zero routes the second input to the c = 0 path.
    pub c: f64,
    pub branch_rule: BranchRule,
    /// Absolute residual bound on both equations at accepted liquid points.
    pub residual_tol: f64,
    /// Relative imaginary-part threshold separating real from complex.
    pub real_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 0.0,
            branch_rule: BranchRule::Orientation,
            residual_tol: RESIDUAL_TOL,
            real_tol: REAL_TOL,
        }
    }
}

/// Polynomial in z, w and two spatial symbols u, v.
///
/// Terms are coeff · z^i w^j u^a v^b. The symbols stand for (e^{-cx}, e^{-cy})
/// when the volume weight is nonzero and for (x, y) at c = 0; z and w
/// exponents may be negative, the symbol exponents may not.
#[derive(Clone, Debug, PartialEq)]
pub struct XyPoly {
    terms: Vec<(i32, i32, u32, u32, f64)>,
}

impl XyPoly {
    /// Build from (z exp, w exp, u exp, v exp, coeff) terms; duplicates
    /// merge and zero coefficients drop.
    pub fn from_terms(terms: &[(i32, i32, u32, u32, f64)]) -> XyPoly {
        let mut merged: Vec<(i32, i32, u32, u32, f64)> = Vec::new();
        for &(i, j, a, b, c) in terms {
            if let Some(t) = merged
                .iter_mut()
                .find(|t| t.0 == i && t.1 == j && t.2 == a && t.3 == b)
            {
                t.4 += c;
            } else {
                merged.push((i, j, a, b, c));
            }
        }
        merged.retain(|t| t.4 != 0.0);
        merged.sort_by_key(|t| (t.0, t.1, t.2, t.3));
        XyPoly { terms: merged }
    }

    /// u · z P_z + v · w P_w for the given curve; the left-hand side of the
    /// c = 0 second equation before a right-hand side is subtracted.
    pub fn lambda(p: &BiPoly) -> XyPoly {
        let mut terms = Vec::new();
        for &(i, j, c) in p.z_dz().f64_terms() {
            terms.push((i, j, 1, 0, c));
        }
        for &(i, j, c) in p.w_dw().f64_terms() {
            terms.push((i, j, 0, 1, c));
        }
        XyPoly::from_terms(&terms)
    }

    /// Embed a polynomial in z, w alone (no spatial symbols).
    pub fn from_bipoly(q: &BiPoly) -> XyPoly {
        let terms: Vec<_> = q.f64_terms().iter().map(|&(i, j, c)| (i, j, 0, 0, c)).collect();
        XyPoly::from_terms(&terms)
    }

    /// Difference of two polynomials.
    pub fn sub(&self, rhs: &XyPoly) -> XyPoly {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().map(|&(i, j, a, b, c)| (i, j, a, b, -c)));
        XyPoly::from_terms(&terms)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value at (z, w) for fixed spatial symbols.
    pub fn eval(&self, z: Complex64, w: Complex64, u: f64, v: f64) -> Complex64 {
        let mut acc = Complex64::zero();
        for &(i, j, a, b, c) in &self.terms {
            acc += c * u.powi(a as i32) * v.powi(b as i32) * z.powi(i) * w.powi(j);
        }
        acc
    }

    /// Multiply by z^dz w^dw so every z and w exponent is nonnegative.
    fn cleared(&self) -> XyPoly {
        let dz = -self.terms.iter().map(|t| t.0.min(0)).min().unwrap_or(0);
        let dw = -self.terms.iter().map(|t| t.1.min(0)).min().unwrap_or(0);
        let terms: Vec<_> = self.terms.iter().map(|&(i, j, a, b, c)| (i + dz, j + dw, a, b, c)).collect();
        XyPoly { terms }
    }

    fn degrees(&self) -> (usize, usize, usize, usize) {
        let mut d = (0, 0, 0, 0);
        for &(i, j, a, b, _) in &self.terms {
            d.0 = d.0.max(i.max(0) as usize);
            d.1 = d.1.max(j.max(0) as usize);
            d.2 = d.2.max(a as usize);
            d.3 = d.3.max(b as usize);
        }
        d
    }

    fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.4.abs()))
    }

    fn scaled(&self, s: f64) -> XyPoly {
        XyPoly {
            terms: self.terms.iter().map(|&(i, j, a, b, c)| (i, j, a, b, c * s)).collect(),
        }
    }
}

/// Second equation specialized to one spatial point: a plain polynomial in
/// z, w with nonnegative exponents.
struct SpatialSecond {
    terms: Vec<(u32, u32, f64)>,
}

impl SpatialSecond {
    fn eval(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64) {
        let mut val = Complex64::zero();
        let mut dz = Complex64::zero();
        let mut dw = Complex64::zero();
        for &(i, j, c) in &self.terms {
            let zi = z.powu(i);
            let wj = w.powu(j);
            val += c * zi * wj;
            if i > 0 {
                dz += c * i as f64 * z.powu(i - 1) * wj;
            }
            if j > 0 {
                dw += c * j as f64 * zi * w.powu(j - 1);
            }
        }
        (val, dz, dw)
    }

    fn bound(&self, rz: f64, rw: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(i, j, c)| c.abs() * rz.powi(i as i32) * rw.powi(j as i32))
            .sum()
    }
}

/// Newton polygon with lattice data used for gradient bookkeeping.
struct NewtonRegion {
    verts: Vec<(f64, f64)>,
    interior: Vec<(i64, i64)>,
    centroid: (f64, f64),
}

impl NewtonRegion {
    fn build(poly: &[(i64, i64)]) -> Result<NewtonRegion> {
        if poly.len() < 3 {
            return Err(Error::DegenerateInput(
                "Newton polygon is degenerate; the curve must involve both variables".into(),
            ));
        }
        let verts: Vec<(f64, f64)> = poly.iter().map(|&(i, j)| (i as f64, j as f64)).collect();
        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for k in 0..verts.len() {
            let (x0, y0) = verts[k];
            let (x1, y1) = verts[(k + 1) % verts.len()];
            let cross = x0 * y1 - x1 * y0;
            area2 += cross;
            cx += (x0 + x1) * cross;
            cy += (y0 + y1) * cross;
        }
        if area2.abs() < 1e-12 {
            return Err(Error::DegenerateInput("Newton polygon has zero area".into()));
        }
        let centroid = (cx / (3.0 * area2), cy / (3.0 * area2));
        let mut interior = Vec::new();
        let (imin, imax) = poly.iter().fold((i64::MAX, i64::MIN), |m, p| (m.0.min(p.0), m.1.max(p.0)));
        let (jmin, jmax) = poly.iter().fold((i64::MAX, i64::MIN), |m, p| (m.0.min(p.1), m.1.max(p.1)));
        for i in imin..=imax {
            for j in jmin..=jmax {
                // strict interior by exact integer cross products on the CCW hull
                let inside = (0..poly.len()).all(|k| {
                    let a = poly[k];
                    let b = poly[(k + 1) % poly.len()];
                    (b.0 - a.0) * (j - a.1) - (b.1 - a.1) * (i - a.0) > 0
                });
                if inside {
                    interior.push((i, j));
                }
            }
        }
        Ok(NewtonRegion { verts, interior, centroid })
    }

    /// Signed distance to the boundary, positive inside.
    fn signed_distance(&self, g: (f64, f64)) -> f64 {
        let mut sd = f64::INFINITY;
        for k in 0..self.verts.len() {
            let (ax, ay) = self.verts[k];
            let (bx, by) = self.verts[(k + 1) % self.verts.len()];
            let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
            sd = sd.min(((bx - ax) * (g.1 - ay) - (by - ay) * (g.0 - ax)) / len);
        }
        sd
    }

    /// All lattice translates of `raw` lying in the polygon, in a fixed
    /// deterministic order.
    fn lattice_shifts(&self, raw: (f64, f64)) -> Vec<(f64, f64)> {
        let xs: Vec<f64> = self.verts.iter().map(|v| v.0).collect();
        let ys: Vec<f64> = self.verts.iter().map(|v| v.1).collect();
        let (xmin, xmax) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
        let (ymin, ymax) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
        let mut out = Vec::new();
        let mut a = (xmin - raw.0).floor() as i64 - 1;
        while raw.0 + a as f64 <= xmax + 1.0 {
            let mut b = (ymin - raw.1).floor() as i64 - 1;
            while raw.1 + b as f64 <= ymax + 1.0 {
                let g = (raw.0 + a as f64, raw.1 + b as f64);
                if self.signed_distance(g) >= -POLYGON_TOL {
                    out.push(g);
                }
                b += 1;
            }
            a += 1;
        }
        out
    }

    /// Vertex minimizing the inner product with the outward direction; the
    /// facet convention for far queries no axis ray can see.
    fn supporting_vertex(&self, dir: (f64, f64)) -> (i64, i64) {
        let mut best = (self.verts[0], f64::INFINITY);
        for &v in &self.verts {
            let s = v.0 * dir.0 + v.1 * dir.1;
            let key = (s, v.0, v.1);
            let bkey = (best.1, best.0 .0, best.0 .1);
            if key < bkey {
                best = (v, s);
            }
        }
        (best.0 .0 as i64, best.0 .1 as i64)
    }
}

/// Eliminant of the system: coefficient of z^k is Σ c · u^a v^b.
struct Eliminant {
    zcoeffs: Vec<Vec<(u32, u32, f64)>>,
}

/// The spatial dependence of the second equation.
enum SecondKind {
    /// Q(u z, v w) = 0 with u = e^{-cx}, v = e^{-cy}; the Laurent Q is kept
    /// for residual checks at the rescaled pair.
    Exponential { q: BiPoly, c: f64 },
    /// G(z, w, x, y) = 0 with the symbols standing for the raw coordinates.
    Polynomial { g: XyPoly },
}

/// One scene's solver: the curve, the second equation, and the eliminant
/// precomputed once so each spatial query is a univariate root find.
pub struct PQSystem {
    p: BiPoly,
    second: SecondKind,
    e_tilde: XyPoly,
    pw: Vec<Vec<f64>>,
    elim: Eliminant,
    region: NewtonRegion,
    cfg: SolverConfig,
}

impl PQSystem {
    /// Scene with volume weight c ≠ 0 and second curve Q in the rescaled
    /// variables (ζ, ω) = (e^{-cx} z, e^{-cy} w).
    pub fn new(p: BiPoly, q: BiPoly, c: f64) -> Result<PQSystem> {
        if c == 0.0 {
            return Err(Error::DegenerateInput(
                "volume weight zero needs the polynomial second equation".into(),
            ));
        }
        if q.f64_terms().is_empty() {
            return Err(Error::DegenerateInput("second curve is zero".into()));
        }
        // Q(uz, vw) turns z^i w^j into u^i v^j z^i w^j; clearing negative
        // exponents multiplies by (uz)^dz (vw)^dw, so the symbol exponents
        // stay locked to the variable exponents
        let dz = -q.f64_terms().iter().map(|t| t.0.min(0)).min().unwrap_or(0);
        let dw = -q.f64_terms().iter().map(|t| t.1.min(0)).min().unwrap_or(0);
        let mut shifted = Vec::new();
        for &(i, j, cf) in q.f64_terms() {
            shifted.push((i + dz, j + dw, (i + dz) as u32, (j + dw) as u32, cf));
        }
        let e_tilde = XyPoly::from_terms(&shifted);
        Self::assemble(p, SecondKind::Exponential { q, c }, e_tilde, SolverConfig { c, ..SolverConfig::default() })
    }

    /// c = 0 scene with second equation x z P_z + y w P_w = Q0(z, w).
    pub fn q0(p: BiPoly, q0: &BiPoly) -> Result<PQSystem> {
        let g = XyPoly::lambda(&p).sub(&XyPoly::from_bipoly(q0));
        Self::c_zero(p, g)
    }

    /// c = 0 scene with an explicit second equation G(z, w, x, y) = 0.
    pub fn c_zero(p: BiPoly, g: XyPoly) -> Result<PQSystem> {
        if g.is_zero() {
            return Err(Error::DegenerateInput("second equation is zero".into()));
        }
        let e_tilde = g.cleared();
        Self::assemble(p, SecondKind::Polynomial { g }, e_tilde, SolverConfig::default())
    }

    /// Route by the configured volume weight: zero treats `q` as the Q0 of
    /// the c = 0 second equation, nonzero as the rescaled second curve.
    pub fn from_config(p: BiPoly, q: BiPoly, cfg: &SolverConfig) -> Result<PQSystem> {
        let mut sys = if cfg.c == 0.0 { Self::q0(p, &q)? } else { Self::new(p, q, cfg.c)? };
        sys.cfg.residual_tol = cfg.residual_tol;
        sys.cfg.real_tol = cfg.real_tol;
        sys.cfg.branch_rule = cfg.branch_rule;
        Ok(sys)
    }

    fn assemble(p: BiPoly, second: SecondKind, e_tilde: XyPoly, cfg: SolverConfig) -> Result<PQSystem> {
        if p.is_zero() {
            return Err(Error::DegenerateInput("spectral curve is zero".into()));
        }
        let region = NewtonRegion::build(&p.newton_polygon())?;
        let escale = e_tilde.max_abs_coeff();
        if escale == 0.0 {
            return Err(Error::DegenerateInput("second equation is zero".into()));
        }
        let e_tilde = e_tilde.scaled(1.0 / escale);
        let (zmin, wmin) = p.min_exponents();
        let (zmax, wmax) = p.max_exponents();
        let (sz, sw) = ((-zmin.min(0)) as i32, (-wmin.min(0)) as i32);
        let mut pw = vec![vec![0.0; (zmax + sz) as usize + 1]; (wmax + sw) as usize + 1];
        let pscale = p.f64_terms().iter().fold(0.0f64, |m, t| m.max(t.2.abs()));
        for &(i, j, c) in p.f64_terms() {
            pw[(j + sw) as usize][(i + sz) as usize] = c / pscale;
        }
        if pw.len() < 2 {
            return Err(Error::DegenerateInput("spectral curve does not involve w".into()));
        }
        let elim = eliminate(&pw, &e_tilde)?;
        Ok(PQSystem { p, second, e_tilde, pw, elim, region, cfg })
    }

    /// The Newton polygon the reported gradients live in.
    pub fn newton_polygon(&self) -> Vec<(i64, i64)> {
        self.p.newton_polygon()
    }

    fn spatial(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        match &self.second {
            SecondKind::Exponential { c, .. } => {
                if (c * x).abs() > EXP_ARG_LIMIT || (c * y).abs() > EXP_ARG_LIMIT {
                    return Err(Error::Domain(format!(
                        "point ({x}, {y}) overflows the exponential substitution"
                    )));
                }
                Ok(((-c * x).exp(), (-c * y).exp()))
            }
            SecondKind::Polynomial { .. } => Ok((x, y)),
        }
    }

    fn specialized_second(&self, u: f64, v: f64) -> SpatialSecond {
        let mut terms: Vec<(u32, u32, f64)> = Vec::new();
        for &(i, j, a, b, c) in &self.e_tilde.terms {
            let coeff = c * u.powi(a as i32) * v.powi(b as i32);
            if let Some(t) = terms.iter_mut().find(|t| t.0 == i as u32 && t.1 == j as u32) {
                t.2 += coeff;
            } else {
                terms.push((i as u32, j as u32, coeff));
            }
        }
        SpatialSecond { terms }
    }

    fn specialized_eliminant(&self, u: f64, v: f64) -> Vec<Complex64> {
        let mut coeffs: Vec<f64> = Vec::with_capacity(self.elim.zcoeffs.len());
        for cs in &self.elim.zcoeffs {
            let mut acc = 0.0;
            for &(a, b, c) in cs {
                acc += c * u.powi(a as i32) * v.powi(b as i32);
            }
            coeffs.push(acc);
        }
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.abs() <= 1e-12 * max) {
            coeffs.pop();
        }
        if max == 0.0 {
            return Vec::new();
        }
        coeffs.into_iter().map(|c| Complex64::new(c / max, 0.0)).collect()
    }

    fn w_fiber(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let coeffs: Vec<Complex64> = self
            .pw
            .iter()
            .map(|row| {
                let mut acc = Complex64::zero();
                for &c in row.iter().rev() {
                    acc = acc * z + c;
                }
                acc
            })
            .collect();
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return Ok(Vec::new());
        }
        let mut trimmed = coeffs;
        while trimmed.len() > 1 && trimmed.last().map_or(false, |c| c.norm() <= 1e-12 * scale) {
            trimmed.pop();
        }
        if trimmed.len() < 2 {
            return Ok(Vec::new());
        }
        let poly = UniPoly::new(trimmed);
        Ok(poly.roots()?.into_iter().map(|(r, _)| r).collect())
    }

    fn eval_p_tilde(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64) {
        let mut rows = Vec::with_capacity(self.pw.len());
        let mut rows_dz = Vec::with_capacity(self.pw.len());
        for row in &self.pw {
            let mut acc = Complex64::zero();
            let mut der = Complex64::zero();
            for &c in row.iter().rev() {
                der = der * z + acc;
                acc = acc * z + c;
            }
            rows.push(acc);
            rows_dz.push(der);
        }
        let mut val = Complex64::zero();
        let mut dw = Complex64::zero();
        for r in rows.iter().rev() {
            dw = dw * w + val;
            val = val * w + r;
        }
        let mut dz = Complex64::zero();
        for r in rows_dz.iter().rev() {
            dz = dz * w + r;
        }
        (val, dz, dw)
    }

    fn p_tilde_bound(&self, rz: f64, rw: f64) -> f64 {
        let mut acc = 0.0;
        for (j, row) in self.pw.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                acc += c.abs() * rz.powi(i as i32) * rw.powi(j as i32);
            }
        }
        acc
    }

    /// Coupled Newton refinement of a candidate pair against (P, second).
    fn polish(&self, es: &SpatialSecond, mut z: Complex64, mut w: Complex64) -> Option<(Complex64, Complex64)> {
        for _ in 0..24 {
            let (pv, pz, pwd) = self.eval_p_tilde(z, w);
            let (ev, ez, ew) = es.eval(z, w);
            let ps = 1.0 + self.p_tilde_bound(z.norm(), w.norm());
            let esb = 1.0 + es.bound(z.norm(), w.norm());
            if pv.norm() <= POLISH_TOL * ps && ev.norm() <= POLISH_TOL * esb {
                return Some((z, w));
            }
            let det = pz * ew - pwd * ez;
            if det.norm() < 1e-280 {
                return None;
            }
            let dz = (pv * ew - pwd * ev) / det;
            let dw = (pz * ev - pv * ez) / det;
            z -= dz;
            w -= dw;
            if !z.is_finite() || !w.is_finite() || z.norm() > 1e13 || w.norm() > 1e13 {
                return None;
            }
        }
        let (pv, _, _) = self.eval_p_tilde(z, w);
        let (ev, _, _) = es.eval(z, w);
        let ps = 1.0 + self.p_tilde_bound(z.norm(), w.norm());
        let esb = 1.0 + es.bound(z.norm(), w.norm());
        if pv.norm() <= 1e-11 * ps && ev.norm() <= 1e-11 * esb {
            Some((z, w))
        } else {
            None
        }
    }

    /// All polished, deduplicated solution pairs at one spatial point.
    fn solution_pairs(&self, u: f64, v: f64, es: &SpatialSecond) -> Result<Vec<(Complex64, Complex64)>> {
        let coeffs = self.specialized_eliminant(u, v);
        if coeffs.len() < 2 {
            return Ok(Vec::new());
        }
        let poly = UniPoly::new(coeffs);
        let zroots = poly.roots()?;
        let mut pairs: Vec<(Complex64, Complex64)> = Vec::new();
        for (z0, _) in zroots {
            if z0.norm() < ROOT_MIN_MODULUS || z0.norm() > ROOT_MAX_MODULUS {
                continue;
            }
            for w0 in self.w_fiber(z0)? {
                if w0.norm() < ROOT_MIN_MODULUS || w0.norm() > ROOT_MAX_MODULUS {
                    continue;
                }
                let (ev, _, _) = es.eval(z0, w0);
                if ev.norm() > 1e-3 * (1.0 + es.bound(z0.norm(), w0.norm())) {
                    continue;
                }
                if let Some((z, w)) = self.polish(es, z0, w0) {
                    if z.norm() < ROOT_MIN_MODULUS || w.norm() < ROOT_MIN_MODULUS {
                        continue;
                    }
                    let dup = pairs.iter().any(|&(pz, pw)| {
                        (pz - z).norm() <= 1e-7 * (1.0 + z.norm()) && (pw - w).norm() <= 1e-7 * (1.0 + w.norm())
                    });
                    if !dup {
                        pairs.push((z, w));
                    }
                }
            }
        }
        Ok(pairs)
    }

    fn is_real_pair(&self, z: Complex64, w: Complex64) -> bool {
        z.im.abs() <= self.cfg.real_tol * (1.0 + z.norm()) && w.im.abs() <= self.cfg.real_tol * (1.0 + w.norm())
    }

    /// Im(w P_w / (z P_z)), the orientation that selects the branch.
    fn orientation(&self, z: Complex64, w: Complex64) -> Result<f64> {
        let (_, pz, pwd) = self.p.eval_and_derivs(z, w)?;
        Ok(((w * pwd) / (z * pz)).im)
    }

    /// Residuals of the two defining equations in their original form.
    fn invariant_residuals(&self, z: Complex64, w: Complex64, x: f64, y: f64) -> Result<(f64, f64)> {
        let (pv, _, _) = self.p.eval_and_derivs(z, w)?;
        let second = match &self.second {
            SecondKind::Exponential { q, c } => {
                let zeta = z * (-c * x).exp();
                let omega = w * (-c * y).exp();
                q.eval_and_derivs(zeta, omega)?.0
            }
            SecondKind::Polynomial { g } => g.eval(z, w, x, y),
        };
        Ok((pv.norm(), second.norm()))
    }

    fn rescaled(&self, z: Complex64, w: Complex64, x: f64, y: f64) -> (Complex64, Complex64) {
        match &self.second {
            SecondKind::Exponential { c, .. } => (z * (-c * x).exp(), w * (-c * y).exp()),
            SecondKind::Polynomial { .. } => (z, w),
        }
    }

    /// The liquid pair at a point, or None when every solution is real.
    /// Cheaper than [`PQSystem::solve`]: no gradient bookkeeping, which
    /// makes it the right entry point for residual sweeps and integrals
    /// of log z and log w.
    pub fn liquid_pair(&self, x: f64, y: f64) -> Result<Option<(Complex64, Complex64)>> {
        match self.resolve(x, y)? {
            PointState::Liquid { z, w } => Ok(Some((z, w))),
            PointState::RealOnly { .. } => Ok(None),
        }
    }

    fn resolve(&self, x: f64, y: f64) -> Result<PointState> {
        let (u, v) = self.spatial(x, y)?;
        let es = self.specialized_second(u, v);
        let had_roots = self.specialized_eliminant(u, v).len() >= 2;
        let pairs = self.solution_pairs(u, v, &es)?;
        let mut complex: Vec<(Complex64, Complex64)> = Vec::new();
        let mut real: Vec<(Complex64, Complex64)> = Vec::new();
        for &(z, w) in &pairs {
            if self.is_real_pair(z, w) {
                real.push((z, w));
            } else {
                complex.push((z, w));
            }
        }
        let mut admissible: Vec<(Complex64, Complex64)> = Vec::new();
        for &(z, w) in &complex {
            if self.orientation(z, w)? > 0.0 {
                admissible.push((z, w));
            }
        }
        if admissible.is_empty() && !complex.is_empty() {
            // the root finder returned only the mirrored members; their
            // conjugates solve the same real-coefficient system
            for &(z, w) in &complex {
                let (zc, wc) = (z.conj(), w.conj());
                if self.orientation(zc, wc)? > 0.0 {
                    if let Some((zp, wp)) = self.polish(&es, zc, wc) {
                        admissible.push((zp, wp));
                    }
                }
            }
        }
        let mut distinct: Vec<(Complex64, Complex64)> = Vec::new();
        for &(z, w) in &admissible {
            let dup = distinct.iter().any(|&(pz, pw)| {
                (pz - z).norm() <= 1e-7 * (1.0 + z.norm()) && (pw - w).norm() <= 1e-7 * (1.0 + w.norm())
            });
            if !dup {
                distinct.push((z, w));
            }
        }
        let admissible = distinct;
        match admissible.len() {
            0 => {
                real.sort_by(|a, b| {
                    (a.0.re, a.1.re)
                        .partial_cmp(&(b.0.re, b.1.re))
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                Ok(PointState::RealOnly { reps: real, had_roots })
            }
            1 => Ok(PointState::Liquid { z: admissible[0].0, w: admissible[0].1 }),
            n => Err(Error::AmbiguousBranch(format!(
                "{n} inequivalent oriented pairs at ({x}, {y}); first two are \
                 z = {}, {}",
                admissible[0].0, admissible[1].0
            ))),
        }
    }

    /// Solve one spatial point: phase, characteristic pair, and gradient.
    pub fn solve(&self, x: f64, y: f64) -> Result<LiquidSample> {
        match self.resolve(x, y)? {
            PointState::Liquid { z, w } => {
                let (rp, rq) = self.invariant_residuals(z, w, x, y)?;
                if rp > self.cfg.residual_tol || rq > self.cfg.residual_tol {
                    return Err(Error::Convergence {
                        context: format!("liquid pair at ({x}, {y}) has residuals {rp:.2e}, {rq:.2e}"),
                        iterations: 0,
                        residual: rp.max(rq),
                        best: vec![z, w],
                    });
                }
                let grad = self.gradient(x, y, z, w)?;
                let (zeta, omega) = self.rescaled(z, w, x, y);
                Ok(LiquidSample { x, y, z, w, zeta, omega, grad, phase: Phase::Liquid })
            }
            PointState::RealOnly { reps, had_roots } => self.classify_real(x, y, reps, had_roots),
        }
    }

    /// Height gradient at a liquid point. The arguments of the selected
    /// member fix it modulo integer shifts; Newton polygon membership
    /// prunes those, and any remaining ambiguity is resolved by continuing
    /// the pair toward the gas bubble, whose facet slope is the polygon's
    /// unique interior lattice point. When no anchor is reachable the
    /// in-polygon candidate nearest the centroid is reported, determined
    /// only up to lattice shifts.
    fn gradient(&self, x: f64, y: f64, z: Complex64, w: Complex64) -> Result<(f64, f64)> {
        let raw = (w.arg() / PI, -z.arg() / PI);
        let cands = self.region.lattice_shifts(raw);
        match cands.len() {
            0 => Err(Error::Domain(format!(
                "no lattice shift of the angular gradient lies in the Newton polygon at ({x}, {y})"
            ))),
            1 => Ok(cands[0]),
            _ => {
                if self.region.interior.len() == 1 {
                    if let Some(g) = self.anchored_gradient(x, y, z, w, self.region.interior[0]) {
                        return Ok(g);
                    }
                }
                let mut best = cands[0];
                let mut bd = f64::INFINITY;
                for &g in &cands {
                    let d = (g.0 - self.region.centroid.0).powi(2) + (g.1 - self.region.centroid.1).powi(2);
                    if d < bd - 1e-15 || (d < bd + 1e-15 && (g.0, g.1) < (best.0, best.1)) {
                        best = g;
                        bd = d;
                    }
                }
                Ok(best)
            }
        }
    }

    /// Continue the pair along the segment toward the origin, unwrapping
    /// arg z and arg w, until the pair degenerates at a gas boundary; the
    /// known facet slope there pins the lattice shift at the start point.
    fn anchored_gradient(
        &self,
        x0: f64,
        y0: f64,
        z0: Complex64,
        w0: Complex64,
        anchor: (i64, i64),
    ) -> Option<(f64, f64)> {
        let dist = (x0 * x0 + y0 * y0).sqrt();
        if dist < 1e-9 {
            return None;
        }
        let (dx, dy) = (-x0 / dist, -y0 / dist);
        let (mut x, mut y) = (x0, y0);
        let (mut z, mut w) = (z0, w0);
        let mut aw = w0.arg();
        let mut az = z0.arg();
        let mut traveled = 0.0;
        let mut step = 0.005_f64.min(dist / 8.0);
        let mut reached_boundary = false;
        for _ in 0..40_000 {
            let imz = z.im.abs() / (1.0 + z.norm());
            let imw = w.im.abs() / (1.0 + w.norm());
            // insist on progress first: the start itself may hug a frozen
            // boundary, where the pair is also nearly real
            if traveled > 0.02 && imz < 0.04 && imw < 0.04 {
                reached_boundary = true;
                break;
            }
            if traveled >= dist - 0.01 {
                return None;
            }
            if imz.min(imw) < 0.12 {
                step = step.min(5e-4);
            }
            let (nx, ny) = (x + dx * step, y + dy * step);
            let (u, v) = self.spatial(nx, ny).ok()?;
            let es = self.specialized_second(u, v);
            let next = self.polish(&es, z, w);
            let ok = next.map_or(false, |(nz, nw)| {
                (nw / w).arg().abs() < 0.7 && (nz / z).arg().abs() < 0.7 && self.orientation(nz, nw).map_or(false, |s| s > -1e-12)
            });
            if ok {
                let (nz, nw) = next.unwrap();
                aw += (nw / w).arg();
                az += (nz / z).arg();
                z = nz;
                w = nw;
                x = nx;
                y = ny;
                traveled += step;
                step = (step * 1.5).min(0.005);
            } else {
                step *= 0.5;
                if step < 1e-8 {
                    let near = z.im.abs() / (1.0 + z.norm()) < 0.3 && w.im.abs() / (1.0 + w.norm()) < 0.3;
                    if near && traveled > 0.02 {
                        reached_boundary = true;
                        break;
                    }
                    return None;
                }
            }
        }
        if !reached_boundary {
            return None;
        }
        let kx = (anchor.0 as f64 - aw / PI).round();
        let ky = (anchor.1 as f64 + az / PI).round();
        let g = (w0.arg() / PI + kx, -z0.arg() / PI + ky);
        if self.region.signed_distance(g) >= -1e-6 {
            Some(g)
        } else {
            None
        }
    }

    /// Phase of a point whose solutions are all real: march axis rays until
    /// they meet liquid or escape, then label facets from the gradients
    /// just inside the nearest liquid boundary.
    fn classify_real(
        &self,
        x: f64,
        y: f64,
        reps: Vec<(Complex64, Complex64)>,
        had_roots: bool,
    ) -> Result<LiquidSample> {
        let (z, w) = reps.first().copied().unwrap_or((
            Complex64::new(f64::NAN, 0.0),
            Complex64::new(f64::NAN, 0.0),
        ));
        if reps.is_empty() && !had_roots && self.region.interior.is_empty() {
            return Err(Error::NoRoot(format!(
                "no finite solutions at ({x}, {y}) and the polygon has no interior lattice point"
            )));
        }
        let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
        let mut hits: Vec<Option<(f64, f64)>> = Vec::with_capacity(4); // (miss distance, hit distance)
        for &(dx, dy) in &dirs {
            hits.push(self.march_ray(x, y, dx, dy));
        }
        let all_blocked = hits.iter().all(|h| h.is_some());
        if all_blocked {
            let bubble = if self.region.interior.len() == 1 {
                self.region.interior[0]
            } else {
                self.consensus_label(x, y, &dirs, &hits)
                    .ok_or_else(|| Error::PhaseBoundary(format!("cannot label the bubble at ({x}, {y})")))?
            };
            let (zeta, omega) = self.rescaled(z, w, x, y);
            return Ok(LiquidSample {
                x,
                y,
                z,
                w,
                zeta,
                omega,
                grad: (bubble.0 as f64, bubble.1 as f64),
                phase: Phase::Gas { bubble },
            });
        }
        let any_blocked = hits.iter().any(|h| h.is_some());
        let slope = if !any_blocked {
            self.region.supporting_vertex((x, y))
        } else {
            self.consensus_label(x, y, &dirs, &hits)
                .unwrap_or_else(|| self.region.supporting_vertex((x, y)))
        };
        let (zeta, omega) = self.rescaled(z, w, x, y);
        Ok(LiquidSample {
            x,
            y,
            z,
            w,
            zeta,
            omega,
            grad: (slope.0 as f64, slope.1 as f64),
            phase: Phase::Frozen { slope },
        })
    }

    /// March a ray; Some((last miss, first hit)) when liquid is found.
    fn march_ray(&self, x: f64, y: f64, dx: f64, dy: f64) -> Option<(f64, f64)> {
        let mut prev = 0.0;
        let mut d = RAY_STEP;
        while d <= RAY_DENSE_RANGE + 1e-12 {
            if self.probe_liquid(x + dx * d, y + dy * d) {
                return Some((prev, d));
            }
            prev = d;
            d += RAY_STEP;
        }
        let mut far = RAY_DENSE_RANGE * 2.0;
        while far <= RAY_MAX_RANGE + 1e-12 {
            if self.probe_liquid(x + dx * far, y + dy * far) {
                return Some((prev, far));
            }
            prev = far;
            far *= 2.0;
        }
        None
    }

    fn probe_liquid(&self, x: f64, y: f64) -> bool {
        matches!(self.resolve(x, y), Ok(PointState::Liquid { .. }))
    }

    /// Majority label among the gradients just inside the liquid boundary
    /// each blocked ray crossed.
    fn consensus_label(
        &self,
        x: f64,
        y: f64,
        dirs: &[(f64, f64); 4],
        hits: &[Option<(f64, f64)>],
    ) -> Option<(i64, i64)> {
        let mut labels: Vec<(i64, i64)> = Vec::new();
        for (k, hit) in hits.iter().enumerate() {
            let Some((miss, hit_d)) = *hit else { continue };
            let (dx, dy) = dirs[k];
            let mut lo = miss;
            let mut hi = hit_d;
            for _ in 0..14 {
                let mid = 0.5 * (lo + hi);
                if self.probe_liquid(x + dx * mid, y + dy * mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            for inset in [0.01, 0.03, 0.08] {
                let px = x + dx * (hi + inset);
                let py = y + dy * (hi + inset);
                if let Ok(sample) = self.solve(px, py) {
                    if sample.phase == Phase::Liquid {
                        labels.push((sample.grad.0.round() as i64, sample.grad.1.round() as i64));
                        break;
                    }
                }
            }
        }
        if labels.is_empty() {
            return None;
        }
        let mut best = (labels[0], 0usize);
        for &l in &labels {
            let count = labels.iter().filter(|&&m| m == l).count();
            if count > best.1 {
                best = (l, count);
            }
        }
        Some(best.0)
    }

    /// Central-difference residual of the transport identity
    /// z_x / z + w_y / w = c at a liquid point, with the given step.
    pub fn residual(&self, x: f64, y: f64, step: f64) -> Result<f64> {
        if step <= 0.0 {
            return Err(Error::DegenerateInput("step must be positive".into()));
        }
        let c = match &self.second {
            SecondKind::Exponential { c, .. } => *c,
            SecondKind::Polynomial { .. } => 0.0,
        };
        let center = self.stencil_pair(x, y)?;
        let xp = self.stencil_pair(x + step, y)?;
        let xm = self.stencil_pair(x - step, y)?;
        let yp = self.stencil_pair(x, y + step)?;
        let ym = self.stencil_pair(x, y - step)?;
        for (zz, ww) in [&xp, &xm, &yp, &ym] {
            if (zz - center.0).norm() > 0.2 * (1.0 + center.0.norm())
                || (ww - center.1).norm() > 0.2 * (1.0 + center.1.norm())
            {
                return Err(Error::PhaseBoundary(format!(
                    "stencil at ({x}, {y}) spans a branch change"
                )));
            }
        }
        let zx = (xp.0 - xm.0) / (2.0 * step);
        let wy = (yp.1 - ym.1) / (2.0 * step);
        Ok((zx / center.0 + wy / center.1 - c).norm())
    }

    fn stencil_pair(&self, x: f64, y: f64) -> Result<(Complex64, Complex64)> {
        match self.resolve(x, y)? {
            PointState::Liquid { z, w } => Ok((z, w)),
            PointState::RealOnly { .. } => Err(Error::PhaseBoundary(format!(
                "stencil point ({x}, {y}) is not liquid"
            ))),
        }
    }
}

enum PointState {
    Liquid { z: Complex64, w: Complex64 },
    RealOnly { reps: Vec<(Complex64, Complex64)>, had_roots: bool },
}

/// Resultant in w of the cleared curve and second equation, interpolated on
/// tensor grids of roots of unity sized by the Sylvester degree bounds.
fn eliminate(pw: &[Vec<f64>], e: &XyPoly) -> Result<Eliminant> {
    let np = pw.len() - 1;
    let dzp = pw.iter().map(|r| r.len().saturating_sub(1)).max().unwrap_or(0);
    let (dze, me, due, dve) = e.degrees();
    let nz = np * dze + me * dzp + 1;
    let nu = np * due + 1;
    let nv = np * dve + 1;
    let dim = np + me;
    if dim == 0 {
        return Err(Error::DegenerateElimination("both equations are constant in w".into()));
    }
    // w-coefficients of the second equation, each a term list in (z, u, v)
    let mut erows: Vec<Vec<(i32, u32, u32, f64)>> = vec![Vec::new(); me + 1];
    for &(i, j, a, b, c) in &e.terms {
        erows[j as usize].push((i, a, b, c));
    }
    let mut values = vec![Complex64::zero(); nz * nu * nv];
    let node = |n: usize, k: usize| Complex64::from_polar(1.0, TAU * k as f64 / n as f64);
    for iz in 0..nz {
        let zc = node(nz, iz);
        let pcoef: Vec<Complex64> = pw
            .iter()
            .map(|row| {
                let mut acc = Complex64::zero();
                for &c in row.iter().rev() {
                    acc = acc * zc + c;
                }
                acc
            })
            .collect();
        for iu in 0..nu {
            let uc = node(nu, iu);
            for iv in 0..nv {
                let vc = node(nv, iv);
                let ecoef: Vec<Complex64> = erows
                    .iter()
                    .map(|row| {
                        let mut acc = Complex64::zero();
                        for &(i, a, b, c) in row {
                            acc += c * zc.powu(i as u32) * uc.powu(a) * vc.powu(b);
                        }
                        acc
                    })
                    .collect();
                let mut m = DMatrix::<Complex64>::zeros(dim, dim);
                for r in 0..me {
                    for k in 0..=np {
                        m[(r, r + k)] = pcoef[np - k];
                    }
                }
                for r in 0..np {
                    for k in 0..=me {
                        m[(me + r, r + k)] = ecoef[me - k];
                    }
                }
                values[(iz * nu + iu) * nv + iv] = m.lu().determinant();
            }
        }
    }
    idft_axis(&mut values, nz, nu * nv);
    for base in 0..nz {
        let mut block: Vec<Complex64> = (0..nu * nv).map(|k| values[base * nu * nv + k]).collect();
        idft_axis(&mut block, nu, nv);
        for iu in 0..nu {
            let mut line: Vec<Complex64> = (0..nv).map(|k| block[iu * nv + k]).collect();
            idft_axis(&mut line, nv, 1);
            for iv in 0..nv {
                block[iu * nv + iv] = line[iv];
            }
        }
        for k in 0..nu * nv {
            values[base * nu * nv + k] = block[k];
        }
    }
    let max = values.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    if max < 1e-12 {
        return Err(Error::DegenerateElimination(
            "the resultant vanishes identically; the curves share a component".into(),
        ));
    }
    let mut zcoeffs: Vec<Vec<(u32, u32, f64)>> = Vec::with_capacity(nz);
    for kz in 0..nz {
        let mut cs = Vec::new();
        for ku in 0..nu {
            for kv in 0..nv {
                let c = values[(kz * nu + ku) * nv + kv].re / max;
                if c.abs() > 1e-13 {
                    cs.push((ku as u32, kv as u32, c));
                }
            }
        }
        zcoeffs.push(cs);
    }
    while zcoeffs.len() > 1 && zcoeffs.last().map_or(false, |c| c.is_empty()) {
        zcoeffs.pop();
    }
    Ok(Eliminant { zcoeffs })
}

/// In-place inverse discrete Fourier transform along the leading axis of a
/// row-major (n × inner) block.
fn idft_axis(data: &mut [Complex64], n: usize, inner: usize) {
    if n <= 1 {
        return;
    }
    let mut out = vec![Complex64::zero(); n * inner];
    for k in 0..n {
        for u in 0..n {
            let tw = Complex64::from_polar(1.0 / n as f64, -TAU * (k * u % n) as f64 / n as f64);
            for s in 0..inner {
                out[k * inner + s] += data[u * inner + s] * tw;
            }
        }
    }
    data.copy_from_slice(&out);
}

/// Solve one point of a volume-weighted scene; builds the eliminant afresh,
/// so repeated queries should go through [`PQSystem`].
pub fn solve_point(p: &BiPoly, q: &BiPoly, c: f64, x: f64, y: f64) -> Result<LiquidSample> {
    PQSystem::new(p.clone(), q.clone(), c)?.solve(x, y)
}

/// Solve one point of a c = 0 scene with right-hand side Q0.
pub fn q0_solve_point(p: &BiPoly, q0: &BiPoly, x: f64, y: f64) -> Result<LiquidSample> {
    PQSystem::q0(p.clone(), q0)?.solve(x, y)
}

/// Transport-identity residual at one point of a volume-weighted scene.
pub fn burgers_residual(p: &BiPoly, q: &BiPoly, c: f64, x: f64, y: f64, step: f64) -> Result<f64> {
    PQSystem::new(p.clone(), q.clone(), c)?.residual(x, y, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipoly::BiPoly;
    use crate::spectral::SpectralCurve;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn p_hex() -> BiPoly {
        BiPoly::from_int_terms(&[(1, 0, 1), (0, 1, 1), (0, 0, -1)])
    }

    fn p_fortress() -> BiPoly {
        BiPoly::from_int_terms(&[(0, 0, 5), (1, 0, 1), (-1, 0, 1), (0, 1, 1), (0, -1, 1)])
    }

    fn q0_fortress() -> BiPoly {
        BiPoly::from_f64_terms(&[(0, 0, -1.5)])
    }

    /// Conic inscribed in the hexagon's six facet lines, in the rescaled
    /// variables, for any volume weight.
    fn q_conic(c: f64) -> BiPoly {
        let e2 = (-2.0 * c).exp();
        BiPoly::from_f64_terms(&[
            (2, 0, 1.0),
            (0, 2, 1.0),
            (1, 1, 2.0 * c.cosh()),
            (1, 0, -(1.0 + e2)),
            (0, 1, -(1.0 + e2)),
            (0, 0, e2),
        ])
    }

    /// Hexagon scene at c = 0: the explicit second equation obtained by
    /// substituting the inscribed conic into x z P_z + y w P_w form.
    fn g_hex() -> XyPoly {
        XyPoly::from_terms(&[
            (1, 1, 0, 0, 1.0),
            (1, 0, 0, 0, -2.0),
            (0, 1, 0, 0, -2.0),
            (0, 0, 0, 0, 2.0),
            (1, 0, 1, 0, -2.0),
            (0, 1, 0, 1, -2.0),
            (2, 0, 2, 0, 1.0),
            (1, 1, 1, 1, 2.0),
            (0, 2, 0, 2, 1.0),
        ])
    }

    fn hexagon() -> &'static PQSystem {
        static S: OnceLock<PQSystem> = OnceLock::new();
        S.get_or_init(|| PQSystem::c_zero(p_hex(), g_hex()).unwrap())
    }

    fn fortress() -> &'static PQSystem {
        static S: OnceLock<PQSystem> = OnceLock::new();
        S.get_or_init(|| PQSystem::q0(p_fortress(), &q0_fortress()).unwrap())
    }

    fn conic(c: f64) -> PQSystem {
        PQSystem::new(p_hex(), q_conic(c), c).unwrap()
    }

    #[test]
    fn hexagon_center_carries_the_symmetric_gradient() {
        let s = hexagon().solve(1.0, 1.0).unwrap();
        assert_eq!(s.phase, Phase::Liquid);
        let zexp = Complex64::from_polar(1.0, -PI / 3.0);
        assert!((s.z - zexp).norm() < 1e-9);
        assert!((s.w - zexp.conj()).norm() < 1e-9);
        assert!((s.grad.0 - 1.0 / 3.0).abs() < 1e-9);
        assert!((s.grad.1 - 1.0 / 3.0).abs() < 1e-9);
        assert_eq!(s.zeta, s.z);
        assert_eq!(s.omega, s.w);
    }

    #[test]
    fn conic_scene_center_is_weight_independent() {
        for c in [0.5, 1.0, 2.0] {
            let s = conic(c).solve(1.0, 1.0).unwrap();
            assert_eq!(s.phase, Phase::Liquid, "c = {c}");
            let zexp = Complex64::from_polar(1.0, -PI / 3.0);
            assert!((s.z - zexp).norm() < 1e-9, "c = {c}, z = {}", s.z);
            assert!((s.grad.0 - 1.0 / 3.0).abs() < 1e-9, "c = {c}");
            assert!((s.grad.1 - 1.0 / 3.0).abs() < 1e-9, "c = {c}");
            assert!((s.zeta - s.z * (-c).exp()).norm() < 1e-12);
            assert!((s.omega - s.w * (-c).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn c_zero_eliminant_matches_direct_substitution() {
        // w = 1 - z on the line, so eliminating w must reproduce
        // (A^2 - 1) z^2 + (1 - 2A + 2Ay) z + (y^2 - 2y) with A = x - y
        let (x, y) = (0.7, 0.4);
        let coeffs = hexagon().specialized_eliminant(x, y);
        let a = x - y;
        let hand = [y * y - 2.0 * y, 1.0 - 2.0 * a + 2.0 * a * y, a * a - 1.0];
        assert_eq!(coeffs.len(), 3);
        let scale = coeffs[2].re / hand[2];
        for k in 0..3 {
            assert!((coeffs[k].re - scale * hand[k]).abs() < 1e-9 * (1.0 + hand[k].abs()));
            assert!(coeffs[k].im.abs() < 1e-12);
        }
    }

    #[test]
    fn fortress_axis_point_pins_branch_and_gradient() {
        let s = fortress().solve(0.4, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Liquid);
        assert!((s.z - Complex64::new(-4.0, 0.0)).norm() < 1e-8);
        let wexp = Complex64::new(-3.0 / 8.0, -(55.0f64).sqrt() / 8.0);
        assert!((s.w - wexp).norm() < 1e-8, "w = {}", s.w);
        let gx = -(PI - (3.0f64 / 8.0).acos()) / PI;
        assert!((s.grad.0 - gx).abs() < 1e-6, "grad = {:?}", s.grad);
        assert!(s.grad.1.abs() < 1e-6);
        let (rp, rq) = fortress().invariant_residuals(s.z, s.w, 0.4, 0.0).unwrap();
        assert!(rp < 1e-10 && rq < 1e-10);
    }

    #[test]
    fn fortress_transposes_under_coordinate_swap() {
        let s = fortress().solve(0.0, 0.4).unwrap();
        assert_eq!(s.phase, Phase::Liquid);
        assert!((s.w - Complex64::new(-4.0, 0.0)).norm() < 1e-8);
        let zexp = Complex64::new(-3.0 / 8.0, (55.0f64).sqrt() / 8.0);
        assert!((s.z - zexp).norm() < 1e-8, "z = {}", s.z);
        let gy = -(PI - (3.0f64 / 8.0).acos()) / PI;
        assert!(s.grad.0.abs() < 1e-6, "grad = {:?}", s.grad);
        assert!((s.grad.1 - gy).abs() < 1e-6);
    }

    #[test]
    fn fortress_mirror_axis_point() {
        let s = fortress().solve(-0.4, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Liquid);
        assert!((s.z - Complex64::new(-0.25, 0.0)).norm() < 1e-8, "z = {}", s.z);
        assert!(s.w.im > 0.0, "w = {}", s.w);
        let gx = (PI - (3.0f64 / 8.0).acos()) / PI;
        assert!((s.grad.0 - gx).abs() < 1e-6, "grad = {:?}", s.grad);
        assert!(s.grad.1.abs() < 1e-6);
    }

    #[test]
    fn fortress_center_is_gas() {
        let s = fortress().solve(0.0, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Gas { bubble: (0, 0) });
        assert!(s.z.re.is_nan());
        assert_eq!(s.grad, (0.0, 0.0));
    }

    #[test]
    fn fortress_phases_along_the_axis() {
        for x in [0.1, 0.2] {
            let s = fortress().solve(x, 0.0).unwrap();
            assert_eq!(s.phase, Phase::Gas { bubble: (0, 0) }, "x = {x}");
        }
        for x in [0.25, 0.6] {
            let s = fortress().solve(x, 0.0).unwrap();
            assert_eq!(s.phase, Phase::Liquid, "x = {x}");
        }
        for x in [0.7, 0.8] {
            let s = fortress().solve(x, 0.0).unwrap();
            assert_eq!(s.phase, Phase::Frozen { slope: (-1, 0) }, "x = {x}");
        }
    }

    #[test]
    fn fortress_phase_boundaries_bracketed() {
        // inner boundary at sqrt(1/20), outer at sqrt(9/20)
        let s = fortress().solve(0.223, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Gas { bubble: (0, 0) });
        let s = fortress().solve(0.2245, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Liquid);
        let s = fortress().solve(0.670, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Liquid);
        let s = fortress().solve(0.672, 0.0).unwrap();
        assert_eq!(s.phase, Phase::Frozen { slope: (-1, 0) });
    }

    #[test]
    fn hexagon_phase_map_labels_facets() {
        let cases = [
            ((0.1, 0.1), (0, 0)),
            ((1.9, 1.9), (0, 0)),
            ((1.0, 0.05), (0, 1)),
            ((0.05, 1.0), (1, 0)),
            ((0.3, 0.002), (0, 0)),
        ];
        for ((x, y), slope) in cases {
            let s = hexagon().solve(x, y).unwrap();
            assert_eq!(s.phase, Phase::Frozen { slope }, "at ({x}, {y})");
            assert_eq!(s.grad, (slope.0 as f64, slope.1 as f64));
        }
        assert_eq!(hexagon().solve(1.0, 1.0).unwrap().phase, Phase::Liquid);
    }

    #[test]
    fn boundary_tangency_point_is_frozen() {
        // the liquid boundary touches y = 0 here; both solutions collapse
        // into the torus degeneration and only ray topology remains
        let s = hexagon().solve(0.5, 0.0).unwrap();
        match s.phase {
            Phase::Frozen { slope } => {
                assert!(slope == (0, 0) || slope == (0, 1), "slope = {slope:?}")
            }
            other => panic!("expected frozen, got {other:?}"),
        }
    }

    #[test]
    fn conic_scene_corner_wedges_are_frozen() {
        let sys = conic(1.0);
        let cases = [
            ((0.05, 0.05), (0, 0)),
            ((1.95, 1.0), (1, 0)),
            ((1.0, 1.95), (0, 1)),
        ];
        for ((x, y), slope) in cases {
            let s = sys.solve(x, y).unwrap();
            assert_eq!(s.phase, Phase::Frozen { slope }, "at ({x}, {y})");
        }
    }

    #[test]
    fn transport_residual_vanishes_on_hexagon_scene() {
        for &(x, y) in &[(1.0, 1.0), (0.8, 1.1), (1.3, 0.9), (0.6, 0.7), (1.2, 1.4)] {
            let r = hexagon().residual(x, y, 1e-4).unwrap();
            assert!(r < 1e-6, "residual {r:.3e} at ({x}, {y})");
        }
    }

    #[test]
    fn transport_residual_vanishes_on_weighted_scene() {
        let sys = conic(1.0);
        for &(x, y) in &[(1.0, 1.0), (1.1, 0.95), (0.85, 1.05), (1.2, 1.2), (0.95, 0.8)] {
            let r = sys.residual(x, y, 1e-4).unwrap();
            assert!(r < 1e-6, "residual {r:.3e} at ({x}, {y})");
        }
    }

    #[test]
    fn transport_residual_vanishes_on_fortress() {
        for &(x, y) in &[(0.4, 0.0), (0.35, 0.1)] {
            let r = fortress().residual(x, y, 1e-4).unwrap();
            assert!(r < 1e-6, "residual {r:.3e} at ({x}, {y})");
        }
    }

    #[test]
    fn rational_slope_field_is_transported() {
        // u = z / (1 - z) satisfies u_x = u u_y wherever the transport
        // identity holds with c = 0 on this curve
        let step = 1e-4;
        let uat = |x: f64, y: f64| {
            let (z, _) = hexagon().liquid_pair(x, y).unwrap().unwrap();
            z / (Complex64::new(1.0, 0.0) - z)
        };
        for &(x, y) in &[(1.0, 1.0), (0.8, 1.1), (1.2, 0.9), (0.7, 0.6), (1.3, 1.2)] {
            let u0 = uat(x, y);
            let ux = (uat(x + step, y) - uat(x - step, y)) / (2.0 * step);
            let uy = (uat(x, y + step) - uat(x, y - step)) / (2.0 * step);
            assert!((ux - u0 * uy).norm() < 1e-6, "at ({x}, {y})");
        }
    }

    #[test]
    fn gradient_mixed_partials_commute() {
        let d = 1e-3;
        let check = |sys: &PQSystem, x: f64, y: f64| {
            let g = |x: f64, y: f64| sys.solve(x, y).unwrap().grad;
            let dgx_dy = (g(x, y + d).0 - g(x, y - d).0) / (2.0 * d);
            let dgy_dx = (g(x + d, y).1 - g(x - d, y).1) / (2.0 * d);
            assert!((dgx_dy - dgy_dx).abs() < 1e-4, "curl {dgx_dy} vs {dgy_dx} at ({x}, {y})");
        };
        check(&conic(1.0), 0.9, 1.1);
        check(fortress(), 0.35, 0.1);
    }

    #[test]
    fn rescaled_pairs_stay_injective_in_the_liquid_region() {
        let sys = conic(1.0);
        let mut seen: Vec<(Complex64, Complex64)> = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                let x = 0.55 + 0.9 * i as f64 / 11.0;
                let y = 0.55 + 0.9 * j as f64 / 11.0;
                let Some((z, w)) = sys.liquid_pair(x, y).unwrap() else { continue };
                let zeta = z * (-x).exp();
                let omega = w * (-y).exp();
                for &(pz, pw) in &seen {
                    assert!(
                        (pz - zeta).norm() + (pw - omega).norm() > 1e-6,
                        "collision at ({x}, {y})"
                    );
                }
                seen.push((zeta, omega));
            }
        }
        assert!(seen.len() >= 20, "only {} liquid nodes", seen.len());
    }

    #[test]
    fn inconsistent_system_reports_no_root() {
        // x z P_z + y w P_w is identically zero at the origin, so a nonzero
        // constant right-hand side leaves nothing to solve
        let sys = PQSystem::q0(p_hex(), &q0_fortress()).unwrap();
        match sys.solve(0.0, 0.0) {
            Err(Error::NoRoot(_)) => {}
            other => panic!("expected NoRoot, got {other:?}"),
        }
    }

    #[test]
    fn branch_orientation_flips_under_conjugation() {
        let pts = [
            (0.45, 0.0),
            (-0.45, 0.0),
            (0.0, 0.45),
            (0.0, -0.45),
            (0.4, 0.15),
            (-0.4, 0.15),
            (0.4, -0.15),
            (-0.4, -0.15),
            (0.15, 0.4),
            (0.15, -0.4),
        ];
        for (x, y) in pts {
            let (z, w) = fortress().liquid_pair(x, y).unwrap().unwrap_or_else(|| {
                panic!("({x}, {y}) should be liquid");
            });
            let sig = fortress().orientation(z, w).unwrap();
            let sig_conj = fortress().orientation(z.conj(), w.conj()).unwrap();
            assert!(sig > 0.0, "sigma = {sig} at ({x}, {y})");
            assert!(sig_conj < 0.0, "conj sigma = {sig_conj} at ({x}, {y})");
        }
    }

    #[test]
    fn gradient_agrees_with_ronkin_slope_on_width_one_scene() {
        let curve = SpectralCurve::new(p_hex()).unwrap();
        for &(x, y) in &[(1.0, 1.0), (0.9, 1.05), (1.15, 0.85)] {
            let s = hexagon().solve(x, y).unwrap();
            let g = curve.ronkin_gradient(s.z.norm().ln(), s.w.norm().ln());
            assert!((g.0 - s.grad.0).abs() < 1e-4, "at ({x}, {y}): {g:?} vs {:?}", s.grad);
            assert!((g.1 - s.grad.1).abs() < 1e-4, "at ({x}, {y})");
        }
    }

    #[test]
    fn one_shot_helpers_match_the_system_solver() {
        let s = solve_point(&p_hex(), &q_conic(1.0), 1.0, 1.0, 1.0).unwrap();
        assert!((s.grad.0 - 1.0 / 3.0).abs() < 1e-9);
        let s = q0_solve_point(&p_fortress(), &q0_fortress(), 0.4, 0.0).unwrap();
        assert!((s.z - Complex64::new(-4.0, 0.0)).norm() < 1e-8);
        let r = burgers_residual(&p_hex(), &q_conic(1.0), 1.0, 1.05, 0.95, 1e-4).unwrap();
        assert!(r < 1e-6);
    }

    #[test]
    fn lambda_polynomial_evaluates_like_the_derivative_form() {
        let lam = XyPoly::lambda(&p_fortress());
        let z = Complex64::new(2.0, 1.0);
        let w = Complex64::new(1.0, -1.0);
        let (u, v) = (0.3, 0.7);
        let hand = u * (z - 1.0 / z) + v * (w - 1.0 / w);
        assert!((lam.eval(z, w, u, v) - hand).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn conic_scene_liquid_invariants(
            c in 0.5f64..1.5,
            dx in -0.15f64..0.15,
            dy in -0.15f64..0.15,
        ) {
            let sys = conic(c);
            let (x, y) = (1.0 + dx, 1.0 + dy);
            let s = sys.solve(x, y).unwrap();
            prop_assert_eq!(s.phase, Phase::Liquid);
            prop_assert!(s.grad.0 >= -1e-9 && s.grad.1 >= -1e-9);
            prop_assert!(s.grad.0 + s.grad.1 <= 1.0 + 1e-9);
            let (rp, rq) = sys.invariant_residuals(s.z, s.w, x, y).unwrap();
            prop_assert!(rp < 1e-10 && rq < 1e-10);
            prop_assert!(sys.orientation(s.z, s.w).unwrap() > 0.0);
            prop_assert!((s.zeta - s.z * (-c * x).exp()).norm() < 1e-12);
        }
    }
}
