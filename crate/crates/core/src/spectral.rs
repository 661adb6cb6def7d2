//! The amoeba side of a spectral curve.
//!
//! For a real Laurent polynomial P the Ronkin function
//! R(x, y) = (2π)^{-2} ∬ log|P(e^{x+iθ}, e^{y+iφ})| dθ dφ is convex, affine
//! exactly on the complement components of the amoeba, and its gradient maps
//! the plane onto the Newton polygon. Surface tension is its Legendre dual.
//! This module evaluates R three ways (adaptive torus quadrature, exact
//! one-dimensional Jensen reduction along fiber circles, cached grids),
//! exposes the gradient by arc measure, inverts the gradient map for the
//! dual, and spot-checks that fibers over amoeba points carry the expected
//! two-sheeted structure.

use crate::bipoly::mpoly::MPoly;
use crate::bipoly::{BiPoly, UniPoly};
use crate::error::{Error, Result};
use crate::quad;
use num::complex::Complex64;
use num::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;
use std::sync::OnceLock;

/// Absolute tolerance for the adaptive torus quadrature.
const RONKIN_TOL: f64 = 1e-8;
/// Integrand evaluation budget before the adaptive quadrature gives up.
const RONKIN_BUDGET: usize = 1 << 20;
/// Fiber samples per circle when a Ronkin value is wanted.
const VALUE_SAMPLES: usize = 2048;
/// Fiber samples per circle inside Newton iterations (crossings are then
/// located by bisection, so this only has to bracket every sign change).
const GRAD_SAMPLES: usize = 256;
/// Fiber samples for a gradient a caller will consume directly.
const PUBLIC_GRAD_SAMPLES: usize = 1024;
/// Convergence threshold on |∇R - (s,t)| for the Legendre maximizer.
const NEWTON_TOL: f64 = 1e-9;
/// Half-width of the square window the cached Ronkin grid covers.
const RONKIN_WINDOW: f64 = 8.0;
/// Nodes per side of the cached Ronkin grid.
const RONKIN_GRID_N: usize = 129;
/// Nodes per side of the cached surface tension grid.
const SIGMA_GRID_N: usize = 257;
/// Stand-in for log 0; below the smallest positive double's logarithm.
const LOG_FLOOR: f64 = -745.0;

/// Dense real coefficients c_j(z) of the polynomial representative
/// P̃ = Σ c_j(z) w^j, specialized along circles to solve torus fibers.
struct FiberSide {
    wcoeffs: Vec<Vec<f64>>,
}

impl FiberSide {
    fn from_cleared(mp: &MPoly) -> FiberSide {
        let dz = mp.degree(0);
        let dw = mp.degree(1);
        let mut wcoeffs = vec![vec![0.0; dz + 1]; dw + 1];
        for (e, c) in mp.terms() {
            wcoeffs[e[1] as usize][e[0] as usize] = c.to_f64().unwrap_or(f64::NAN);
        }
        FiberSide { wcoeffs }
    }

    fn coeffs_at(&self, z: Complex64) -> Vec<Complex64> {
        self.wcoeffs
            .iter()
            .map(|cs| {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in cs.iter().rev() {
                    acc = acc * z + c;
                }
                acc
            })
            .collect()
    }

    /// log|leading coefficient| and the fiber roots over one base point.
    /// Near-zero leading coefficients are trimmed: a degree drop sends roots
    /// to infinity, and their contribution to the Ronkin integrand is exactly
    /// what moves into the lower leading coefficient.
    fn fiber(&self, z: Complex64) -> (f64, Vec<Complex64>) {
        let mut cs = self.coeffs_at(z);
        let max = cs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if max == 0.0 {
            return (LOG_FLOOR, Vec::new());
        }
        while cs.len() > 1 && cs.last().unwrap().norm() < 1e-14 * max {
            cs.pop();
        }
        let lc = cs.last().unwrap().norm().ln();
        if cs.len() == 1 {
            return (lc, Vec::new());
        }
        let roots = match UniPoly::new(cs).roots() {
            Ok(rs) => rs
                .into_iter()
                .flat_map(|(r, m)| std::iter::repeat(r).take(m))
                .collect(),
            Err(Error::Convergence { best, .. }) => best,
            Err(_) => Vec::new(),
        };
        (lc, roots)
    }
}

/// Number of fiber roots with log-magnitude below `level` at angle `theta`
/// on the circle of radius `r`.
fn count_below(side: &FiberSide, r: f64, theta: f64, level: f64) -> usize {
    let (_, roots) = side.fiber(Complex64::from_polar(r, theta));
    roots
        .iter()
        .filter(|w| w.norm().ln().max(LOG_FLOOR) < level)
        .count()
}

/// Measure of the segment [t0, t1] under the root-counting function, given
/// the counts at its ends. A unit jump is located by bisection on the count;
/// larger jumps are first split until they separate.
fn measure_segment(
    side: &FiberSide,
    r: f64,
    level: f64,
    t0: f64,
    t1: f64,
    c0: usize,
    c1: usize,
    depth: usize,
) -> f64 {
    if c0 == c1 {
        return (t1 - t0) * c0 as f64;
    }
    if depth == 0 || c0.abs_diff(c1) == 1 {
        let (mut lo, mut hi) = (t0, t1);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if count_below(side, r, mid, level) == c0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ts = 0.5 * (lo + hi);
        return c0 as f64 * (ts - t0) + c1 as f64 * (t1 - ts);
    }
    let tm = 0.5 * (t0 + t1);
    let cm = count_below(side, r, tm, level);
    measure_segment(side, r, level, t0, tm, c0, cm, depth - 1)
        + measure_segment(side, r, level, tm, t1, cm, c1, depth - 1)
}

/// ∫ over the circle |·| = e^x of #{fiber roots with log-magnitude < level}.
fn arc_measure(side: &FiberSide, x: f64, level: f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    let r = x.exp();
    let counts: Vec<usize> = (0..n)
        .map(|m| count_below(side, r, h * (m as f64 + 0.5), level))
        .collect();
    let mut total = 0.0;
    for m in 0..n {
        let t0 = h * (m as f64 + 0.5);
        total += measure_segment(
            side,
            r,
            level,
            t0,
            t0 + h,
            counts[m],
            counts[(m + 1) % n],
            14,
        );
    }
    total
}

/// Number of count jumps around the circle; simultaneous double crossings
/// that subdivision cannot separate are counted with their full jump.
fn crossing_events(
    side: &FiberSide,
    r: f64,
    level: f64,
    t0: f64,
    t1: f64,
    c0: usize,
    c1: usize,
    depth: usize,
) -> usize {
    let d = c0.abs_diff(c1);
    if d == 0 {
        return 0;
    }
    if d == 1 || depth == 0 {
        return d;
    }
    let tm = 0.5 * (t0 + t1);
    let cm = count_below(side, r, tm, level);
    crossing_events(side, r, level, t0, tm, c0, cm, depth - 1)
        + crossing_events(side, r, level, tm, t1, cm, c1, depth - 1)
}

/// Sampled fiber data over one circle: per angle the log of the trimmed
/// leading coefficient and the sorted log-magnitudes of the roots. Lengths
/// may differ between samples where the degree dropped.
struct Column {
    h: f64,
    loglc: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

impl Column {
    fn build(side: &FiberSide, x: f64, n: usize) -> Column {
        let h = TAU / n as f64;
        let r = x.exp();
        let mut loglc = Vec::with_capacity(n);
        let mut levels = Vec::with_capacity(n);
        for m in 0..n {
            let (lc, roots) = side.fiber(Complex64::from_polar(r, h * (m as f64 + 0.5)));
            let mut ls: Vec<f64> = roots
                .iter()
                .map(|w| w.norm().ln().max(LOG_FLOOR))
                .collect();
            ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
            loglc.push(lc);
            levels.push(ls);
        }
        Column { h, loglc, levels }
    }

    /// Jensen reduction of the Ronkin integral: the smooth leading term by
    /// the periodic trapezoid rule, plus exact integrals of max(y, ℓ) over
    /// each linear segment of the sorted level paths. Unpaired top levels at
    /// a degree drop contribute half-width flats on both sides.
    fn value(&self, y: f64) -> f64 {
        let n = self.loglc.len();
        let h = self.h;
        let mut acc = 0.0;
        for m in 0..n {
            acc += h * self.loglc[m];
            let a = &self.levels[m];
            let b = &self.levels[(m + 1) % n];
            let k = a.len().min(b.len());
            for &l in a[k..].iter().chain(b[k..].iter()) {
                acc += 0.5 * h * y.max(l);
            }
            for i in 0..k {
                acc += segment_max_integral(a[i], b[i], y, h);
            }
        }
        acc / TAU
    }
}

/// ∫₀^h max(y, ℓ(t)) dt for the linear path ℓ going from a to b.
fn segment_max_integral(a: f64, b: f64, y: f64, h: f64) -> f64 {
    if a >= y && b >= y {
        0.5 * h * (a + b)
    } else if a <= y && b <= y {
        h * y
    } else if a < y {
        let t = h * (y - a) / (b - a);
        y * t + 0.5 * (y + b) * (h - t)
    } else {
        let t = h * (a - y) / (a - b);
        0.5 * (a + y) * t + y * (h - t)
    }
}

/// One cell of the adaptive torus quadrature: its refined estimate (sum of
/// the four quarter estimates, kept for the next refinement) and the
/// difference to its own coarse estimate, which drives the worst-first heap.
struct QuadCell {
    diff: f64,
    quarters: [(f64, f64, f64, f64, f64); 4],
}

impl PartialEq for QuadCell {
    fn eq(&self, other: &Self) -> bool {
        self.diff == other.diff
    }
}
impl Eq for QuadCell {}
impl PartialOrd for QuadCell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QuadCell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.diff.total_cmp(&other.diff)
    }
}

fn gl_cell(f: &impl Fn(f64, f64) -> f64, t0: f64, t1: f64, p0: f64, p1: f64) -> f64 {
    let nt = quad::gl16_nodes(t0, t1);
    let np = quad::gl16_nodes(p0, p1);
    let mut acc = 0.0;
    for &(t, wt) in nt.iter() {
        let mut row = 0.0;
        for &(p, wp) in np.iter() {
            row += wp * f(t, p);
        }
        acc += wt * row;
    }
    acc
}

/// Split a cell into quarters and report (t0, t1, p0, p1, coarse estimate)
/// for each, spending 4·256 integrand evaluations.
fn quarter_estimates(
    f: &impl Fn(f64, f64) -> f64,
    t0: f64,
    t1: f64,
    p0: f64,
    p1: f64,
) -> [(f64, f64, f64, f64, f64); 4] {
    let tm = 0.5 * (t0 + t1);
    let pm = 0.5 * (p0 + p1);
    let bounds = [
        (t0, tm, p0, pm),
        (tm, t1, p0, pm),
        (t0, tm, pm, p1),
        (tm, t1, pm, p1),
    ];
    bounds.map(|(a, b, c, d)| (a, b, c, d, gl_cell(f, a, b, c, d)))
}

/// Worst-first adaptive quadrature over [0,2π]²: cells whose refined and
/// coarse estimates disagree the most are split until the summed
/// disagreement drops below `tol` or the evaluation budget runs out.
fn adaptive_torus(f: &impl Fn(f64, f64) -> f64, tol: f64, budget: usize) -> Result<f64> {
    let mut heap: BinaryHeap<QuadCell> = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = 0.0;
    let mut err = 0.0;
    let init = 4;
    let step = TAU / init as f64;
    for i in 0..init {
        for j in 0..init {
            let (t0, p0) = (i as f64 * step, j as f64 * step);
            let coarse = gl_cell(f, t0, t0 + step, p0, p0 + step);
            let quarters = quarter_estimates(f, t0, t0 + step, p0, p0 + step);
            let refined: f64 = quarters.iter().map(|q| q.4).sum();
            evals += 5 * 256;
            total += refined;
            err += (refined - coarse).abs();
            heap.push(QuadCell {
                diff: (refined - coarse).abs(),
                quarters,
            });
        }
    }
    while err > tol {
        if evals + 16 * 256 > budget {
            return Err(Error::Quadrature {
                achieved: err,
                requested: tol,
                nodes: evals,
            });
        }
        let cell = heap.pop().expect("error positive yet no refinable cell");
        err -= cell.diff;
        for (t0, t1, p0, p1, coarse) in cell.quarters {
            let quarters = quarter_estimates(f, t0, t1, p0, p1);
            let refined: f64 = quarters.iter().map(|q| q.4).sum();
            evals += 4 * 256;
            total += refined - coarse;
            err += (refined - coarse).abs();
            heap.push(QuadCell {
                diff: (refined - coarse).abs(),
                quarters,
            });
        }
    }
    Ok(total / (TAU * TAU))
}

/// Signed distance to a convex counterclockwise polygon boundary, positive
/// inside. Degenerate hulls (a point or a segment) report the negated
/// Euclidean distance, so only points on the hull count as inside.
fn polygon_signed_dist(poly: &[(f64, f64)], s: f64, t: f64) -> f64 {
    if poly.len() < 3 {
        let d = match poly.len() {
            0 => f64::INFINITY,
            1 => ((s - poly[0].0).powi(2) + (t - poly[0].1).powi(2)).sqrt(),
            _ => {
                let (ax, ay) = poly[0];
                let (bx, by) = poly[1];
                let (ex, ey) = (bx - ax, by - ay);
                let len2 = ex * ex + ey * ey;
                let u = (((s - ax) * ex + (t - ay) * ey) / len2).clamp(0.0, 1.0);
                ((s - ax - u * ex).powi(2) + (t - ay - u * ey).powi(2)).sqrt()
            }
        };
        return -d;
    }
    let mut d = f64::INFINITY;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        let len = (ex * ex + ey * ey).sqrt();
        d = d.min((ex * (t - a.1) - ey * (s - a.0)) / len);
    }
    d
}

/// Cached Ronkin values on a uniform grid over the working window.
pub struct RonkinGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// values[ix][iy]
    pub values: Vec<Vec<f64>>,
}

/// Cached surface tension on the Newton polygon's bounding box. Nodes
/// outside the polygon, or too close to its boundary for the maximizer to
/// stay bounded, are marked invalid.
pub struct SigmaGrid {
    pub ss: Vec<f64>,
    pub ts: Vec<f64>,
    /// sigma[it][is], NaN where invalid
    pub sigma: Vec<Vec<f64>>,
    /// Maximizer (x*, y*) per node; meaningful only where valid.
    pub argmax: Vec<Vec<(f64, f64)>>,
    pub valid: Vec<Vec<bool>>,
}

/// Surface tension at one slope together with the maximizing point of the
/// Legendre supremum, which is also the surface tension gradient's preimage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LegendrePoint {
    pub sigma: f64,
    pub x: f64,
    pub y: f64,
}

/// Outcome of the sampling check that fibers over amoeba points come in
/// conjugate pairs: every accepted sample should see exactly two crossings.
#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub pass: bool,
    pub samples: usize,
    /// (x, y, crossing count) for every sample that saw a count other than 2.
    pub witnesses: Vec<(f64, f64, usize)>,
}

pub struct SpectralCurve {
    p: BiPoly,
    polygon: Vec<(i64, i64)>,
    wside: FiberSide,
    zside: FiberSide,
    shifts: (i32, i32),
    logdenom: f64,
    ronkin_cache: OnceLock<RonkinGrid>,
    sigma_cache: OnceLock<SigmaGrid>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

impl SpectralCurve {
    pub fn new(p: BiPoly) -> Result<SpectralCurve> {
        if p.terms().next().is_none() {
            return Err(Error::DegenerateInput(
                "zero polynomial has no spectral curve".into(),
            ));
        }
        let polygon = p.newton_polygon();
        let (mp, shifts, denom) = p.cleared();
        let wside = FiberSide::from_cleared(&mp);
        let (mt, _, _) = p.transposed().cleared();
        let zside = FiberSide::from_cleared(&mt);
        let logdenom = denom.to_f64().unwrap_or(f64::NAN).ln();
        Ok(SpectralCurve {
            p,
            polygon,
            wside,
            zside,
            shifts,
            logdenom,
            ronkin_cache: OnceLock::new(),
            sigma_cache: OnceLock::new(),
        })
    }

    pub fn polynomial(&self) -> &BiPoly {
        &self.p
    }

    pub fn newton_polygon(&self) -> &[(i64, i64)] {
        &self.polygon
    }

    fn polygon_f64(&self) -> Vec<(f64, f64)> {
        self.polygon
            .iter()
            .map(|&(i, j)| (i as f64, j as f64))
            .collect()
    }

    /// Ronkin function by adaptive tensor quadrature over the torus, to an
    /// absolute tolerance of 1e-8 within a fixed evaluation budget.
    pub fn ronkin(&self, x: f64, y: f64) -> Result<f64> {
        self.ronkin_with_budget(x, y, RONKIN_TOL, RONKIN_BUDGET)
    }

    fn ronkin_with_budget(&self, x: f64, y: f64, tol: f64, budget: usize) -> Result<f64> {
        let terms = self.p.f64_terms().to_vec();
        let (ex, ey) = (x.exp(), y.exp());
        let f = move |th: f64, ph: f64| {
            let z = Complex64::from_polar(ex, th);
            let w = Complex64::from_polar(ey, ph);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(i, j, c) in &terms {
                acc += c * z.powi(i) * w.powi(j);
            }
            acc.norm().ln().max(LOG_FLOOR)
        };
        adaptive_torus(&f, tol, budget)
    }

    /// Ronkin function by the one-dimensional Jensen reduction: fiber roots
    /// are solved on `n` circle samples and the level integrals are taken
    /// exactly on the piecewise-linear interpolant. Accuracy is O(h²) from
    /// the arcs truncated at level crossings, about 2e-7 at n = 2048; the
    /// interpolant is integrated exactly, so the result is exactly convex
    /// in y for a fixed column, which the cached grid relies on.
    fn jensen_value(&self, x: f64, y: f64, n: usize) -> f64 {
        let col = Column::build(&self.wside, x, n);
        col.value(y) + self.shifts.0 as f64 * x + self.shifts.1 as f64 * y - self.logdenom
    }

    /// ∇R by arc measure: ∂R/∂y is the angular measure of fiber roots below
    /// the level, and symmetrically for ∂R/∂x on the transposed curve.
    pub fn ronkin_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        self.gradient_n(x, y, PUBLIC_GRAD_SAMPLES)
    }

    fn gradient_n(&self, x: f64, y: f64, n: usize) -> (f64, f64) {
        let gy = arc_measure(&self.wside, x, y, n) / TAU + self.shifts.1 as f64;
        let gx = arc_measure(&self.zside, y, x, n) / TAU + self.shifts.0 as f64;
        (gx, gy)
    }

    /// Number of fiber crossings of the level y around the circle at x;
    /// 2 at interior amoeba points of a curve with the expected real
    /// structure, 0 off the amoeba.
    pub(crate) fn crossings(&self, x: f64, y: f64) -> usize {
        let n = 1024;
        let h = TAU / n as f64;
        let r = x.exp();
        let counts: Vec<usize> = (0..n)
            .map(|m| count_below(&self.wside, r, h * (m as f64 + 0.5), y))
            .collect();
        let mut events = 0;
        for m in 0..n {
            let t0 = h * (m as f64 + 0.5);
            events += crossing_events(
                &self.wside,
                r,
                y,
                t0,
                t0 + h,
                counts[m],
                counts[(m + 1) % n],
                12,
            );
        }
        events
    }

    /// Newton iteration for the maximizer of s·x + t·y - R(x, y), with a
    /// forward-difference Jacobian, step clamping and backtracking.
    fn legendre_solve(&self, s: f64, t: f64, seed: (f64, f64)) -> Result<(f64, f64)> {
        let res = |x: f64, y: f64| {
            let (gx, gy) = self.gradient_n(x, y, GRAD_SAMPLES);
            (gx - s, gy - t)
        };
        let (mut x, mut y) = seed;
        let (mut g0, mut g1) = res(x, y);
        let mut gn = (g0 * g0 + g1 * g1).sqrt();
        for iter in 0..60 {
            if gn <= NEWTON_TOL {
                return Ok((x, y));
            }
            let d = 1e-4 * (1.0 + x.abs().max(y.abs()));
            let (ax, ay) = res(x + d, y);
            let (bx, by) = res(x, y + d);
            let j00 = (ax - g0) / d;
            let j11 = (by - g1) / d;
            // the Jacobian is a Hessian of R, so symmetrize the off-diagonal
            let j01 = 0.5 * ((bx - g0) / d + (ay - g1) / d);
            let mut det = j00 * j11 - j01 * j01;
            let (j00, j11) = if det.abs() < 1e-12 {
                let r = 1e-6 + det.abs();
                det = (j00 + r) * (j11 + r) - j01 * j01;
                (j00 + r, j11 + r)
            } else {
                (j00, j11)
            };
            if det.abs() < 1e-15 {
                break;
            }
            let mut sx = -(j11 * g0 - j01 * g1) / det;
            let mut sy = -(j00 * g1 - j01 * g0) / det;
            let sn = (sx * sx + sy * sy).sqrt();
            if sn > 2.0 {
                sx *= 2.0 / sn;
                sy *= 2.0 / sn;
            }
            let mut improved = false;
            let mut f = 1.0;
            for _ in 0..=8 {
                let (cx, cy) = (x + f * sx, y + f * sy);
                let (h0, h1) = res(cx, cy);
                let hn = (h0 * h0 + h1 * h1).sqrt();
                if hn < gn {
                    x = cx;
                    y = cy;
                    g0 = h0;
                    g1 = h1;
                    gn = hn;
                    improved = true;
                    break;
                }
                f *= 0.5;
            }
            if !improved {
                let _ = iter;
                break;
            }
        }
        if gn <= NEWTON_TOL {
            return Ok((x, y));
        }
        Err(Error::Convergence {
            context: "surface tension maximizer".into(),
            iterations: 60,
            residual: gn,
            best: vec![Complex64::new(x, y)],
        })
    }

    /// Best grid node for starting the maximizer search at slope (s, t).
    fn grid_seed(&self, s: f64, t: f64) -> (f64, f64) {
        let g = self.ronkin_grid();
        let mut best = (0.0, 0.0);
        let mut bv = f64::NEG_INFINITY;
        for (ix, &x) in g.xs.iter().enumerate() {
            for (iy, &y) in g.ys.iter().enumerate() {
                let v = s * x + t * y - g.values[ix][iy];
                if v > bv {
                    bv = v;
                    best = (x, y);
                }
            }
        }
        best
    }

    fn window_sup(&self, s: f64, t: f64) -> LegendrePoint {
        let g = self.ronkin_grid();
        let mut best = LegendrePoint {
            sigma: f64::NEG_INFINITY,
            x: 0.0,
            y: 0.0,
        };
        for (ix, &x) in g.xs.iter().enumerate() {
            for (iy, &y) in g.ys.iter().enumerate() {
                let v = s * x + t * y - g.values[ix][iy];
                if v > best.sigma {
                    best = LegendrePoint { sigma: v, x, y };
                }
            }
        }
        best
    }

    /// Surface tension σ(s, t) = sup_{x,y} (s·x + t·y - R(x, y)) with its
    /// maximizer. Slopes outside the Newton polygon are rejected. Strictly
    /// interior slopes get the Newton-polished supremum; on and near the
    /// boundary the maximizer escapes to infinity, so the value is read off
    /// as a windowed supremum over the cached grid instead.
    pub fn legendre_point(&self, s: f64, t: f64) -> Result<LegendrePoint> {
        let poly = self.polygon_f64();
        let sd = polygon_signed_dist(&poly, s, t);
        if sd < -1e-9 {
            return Err(Error::OutOfPolygon(s, t));
        }
        let diam = polygon_diameter(&poly);
        if sd < 2e-3 * diam {
            return Ok(self.window_sup(s, t));
        }
        let seed = self
            .sigma_cache
            .get()
            .and_then(|g| g.nearest_valid(s, t))
            .unwrap_or_else(|| self.grid_seed(s, t));
        let (x, y) = self.legendre_solve(s, t, seed)?;
        let sigma = s * x + t * y - self.jensen_value(x, y, VALUE_SAMPLES);
        Ok(LegendrePoint { sigma, x, y })
    }

    pub fn surface_tension(&self, s: f64, t: f64) -> Result<f64> {
        self.legendre_point(s, t).map(|p| p.sigma)
    }

    /// Cached Ronkin values, built on first use.
    pub fn ronkin_grid(&self) -> &RonkinGrid {
        self.ronkin_cache.get_or_init(|| {
            let xs = linspace(-RONKIN_WINDOW, RONKIN_WINDOW, RONKIN_GRID_N);
            let ys = xs.clone();
            let values: Vec<Vec<f64>> = xs
                .par_iter()
                .map(|&x| {
                    let col = Column::build(&self.wside, x, VALUE_SAMPLES);
                    ys.iter()
                        .map(|&y| {
                            col.value(y) + self.shifts.0 as f64 * x + self.shifts.1 as f64 * y
                                - self.logdenom
                        })
                        .collect()
                })
                .collect();
            RonkinGrid { xs, ys, values }
        })
    }

    /// Cached surface tension over the Newton polygon, built on first use.
    /// Rows are filled left to right so each solve is warm-started from its
    /// neighbor's maximizer.
    pub fn sigma_grid(&self) -> &SigmaGrid {
        self.sigma_cache.get_or_init(|| {
            let poly = self.polygon_f64();
            let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(a, b) in &poly {
                smin = smin.min(a);
                smax = smax.max(a);
                tmin = tmin.min(b);
                tmax = tmax.max(b);
            }
            let diam = polygon_diameter(&poly);
            let margin = 2e-3 * diam;
            let ss = linspace(smin, smax, SIGMA_GRID_N);
            let ts = linspace(tmin, tmax, SIGMA_GRID_N);
            let rows: Vec<(Vec<f64>, Vec<(f64, f64)>, Vec<bool>)> = ts
                .par_iter()
                .map(|&t| {
                    let mut sig = vec![f64::NAN; SIGMA_GRID_N];
                    let mut arg = vec![(0.0, 0.0); SIGMA_GRID_N];
                    let mut ok = vec![false; SIGMA_GRID_N];
                    let mut seed: Option<(f64, f64)> = None;
                    for (is, &s) in ss.iter().enumerate() {
                        if polygon_signed_dist(&poly, s, t) < margin {
                            seed = None;
                            continue;
                        }
                        let sd = seed.unwrap_or_else(|| self.grid_seed(s, t));
                        match self.legendre_solve(s, t, sd) {
                            Ok((x, y)) => {
                                sig[is] = s * x + t * y - self.jensen_value(x, y, VALUE_SAMPLES);
                                arg[is] = (x, y);
                                ok[is] = true;
                                seed = Some((x, y));
                            }
                            Err(_) => {
                                seed = None;
                            }
                        }
                    }
                    (sig, arg, ok)
                })
                .collect();
            let mut sigma = Vec::with_capacity(SIGMA_GRID_N);
            let mut argmax = Vec::with_capacity(SIGMA_GRID_N);
            let mut valid = Vec::with_capacity(SIGMA_GRID_N);
            for (sig, arg, ok) in rows {
                sigma.push(sig);
                argmax.push(arg);
                valid.push(ok);
            }
            SigmaGrid {
                ss,
                ts,
                sigma,
                argmax,
                valid,
            }
        })
    }

    /// Draw points uniformly from the working window, keep those on the
    /// amoeba, and check that each sees exactly two fiber crossings.
    pub fn harnack_check(&self, samples: usize) -> HarnackReport {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5bec7261);
        let mut accepted = 0usize;
        let mut witnesses = Vec::new();
        let mut attempts = 0usize;
        while accepted < samples && attempts < 400 * samples.max(1) {
            attempts += 1;
            let x = rng.gen_range(-RONKIN_WINDOW..RONKIN_WINDOW);
            let y = rng.gen_range(-RONKIN_WINDOW..RONKIN_WINDOW);
            let c = self.crossings(x, y);
            if c == 0 {
                continue;
            }
            accepted += 1;
            if c != 2 {
                witnesses.push((x, y, c));
            }
        }
        HarnackReport {
            pass: accepted == samples && witnesses.is_empty(),
            samples: accepted,
            witnesses,
        }
    }
}

impl SigmaGrid {
    /// Maximizer stored at the valid node nearest to (s, t), if any.
    fn nearest_valid(&self, s: f64, t: f64) -> Option<(f64, f64)> {
        let pick = |vals: &[f64], v: f64| -> usize {
            let n = vals.len();
            let lo = vals[0];
            let hi = vals[n - 1];
            (((v - lo) / (hi - lo) * (n - 1) as f64).round() as isize).clamp(0, n as isize - 1)
                as usize
        };
        let is = pick(&self.ss, s);
        let it = pick(&self.ts, t);
        for radius in 0..4 {
            for dt in -(radius as isize)..=radius as isize {
                for ds in -(radius as isize)..=radius as isize {
                    let jt = it as isize + dt;
                    let js = is as isize + ds;
                    if jt < 0 || js < 0 || jt as usize >= self.ts.len() || js as usize >= self.ss.len()
                    {
                        continue;
                    }
                    if self.valid[jt as usize][js as usize] {
                        return Some(self.argmax[jt as usize][js as usize]);
                    }
                }
            }
        }
        None
    }
}

fn polygon_diameter(poly: &[(f64, f64)]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            let dx = poly[i].0 - poly[j].0;
            let dy = poly[i].1 - poly[j].1;
            d = d.max((dx * dx + dy * dy).sqrt());
        }
    }
    d.max(1e-12)
}
