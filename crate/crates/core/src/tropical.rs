//! Polygonal boundary data and the curve inscribed in it.
//!
//! A closed boundary contour with 3d sides in the three lattice directions
//! pins a degree-d plane curve: the curve must cross the two coordinate axes
//! and the line at infinity at points read off the side positions, one per
//! side. This module builds that curve in three stages. First the
//! volume-extremal piecewise-linear surfaces spanning the boundary heights
//! under the gradient constraint (min and max extensions). Second the corner
//! locus of the minimal surface, completed to a balanced piecewise-linear
//! curve with one chamber per coefficient; its affine offsets seed the
//! coefficients at a large volume multiplier c, where the true curve hugs
//! its piecewise-linear limit. Third a damped Newton solve of the
//! axis-incidence conditions on a rational parametrization of the curve,
//! continued geometrically in c to the requested multiplier, with winding
//! and tangency certificates at every accepted step.
//!
//! Sign conventions: a side `x = α` puts an axis crossing at `ζ = e^{-cα}`,
//! a side `y = β` one at `ω = e^{-cβ}`, and a slope-1 side `x − y = γ` a
//! direction `ω/ζ = -e^{cγ}` at infinity. At a trivalent vertex of the
//! corner locus the three incident line values satisfy (x value) − (y value)
//! = (diagonal value), which is what makes the coefficient assignment
//! consistent around every cycle.

use crate::bipoly::{BiPoly, UniPoly};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;

/// Default notch half-width for [`PolygonalContour::heart9`]. Three of the
/// nine cardioid tangent lines pass through one point; the notch slides them
/// apart by this much, small enough to stay inside the cardioid fitting
/// budget of the scene.
pub const HEART_NOTCH: f64 = 2e-5;

/// Nodes per side of the coarse facet scan grid.
const SCAN_N: usize = 192;
/// Bisection depth when locating facet boundaries along a probe segment.
const SCAN_DEPTH: usize = 42;
/// Relative quantum for identifying affine pieces by their offset.
const OFFSET_QUANTUM: f64 = 1e-9;
/// Keep measured creases at least this far (relative to diameter) from the
/// boundary; outside the contour the extension formulas are not the surface.
const CREASE_MARGIN: f64 = 1e-3;
/// Relative tolerance for matching crease line values against tie values.
const VALUE_TOL: f64 = 1e-9;
/// Relative tolerance for clustering curve vertices.
const VERTEX_TOL: f64 = 1e-7;
/// Numerator of the default seed multiplier c₀ = 16/diameter.
const SEED_C_NUMERATOR: f64 = 16.0;
/// Geometric continuation factor per accepted step.
const CONTINUATION_FACTOR: f64 = 0.7;
/// Continuation aborts when the relative step drops below this.
const MIN_RELATIVE_STEP: f64 = 1e-6;
/// Newton convergence target on the incidence residuals (logarithmic form).
const NEWTON_TOL: f64 = 1e-12;
/// Residual below which a stalled incidence Newton is accepted anyway.
const NEWTON_STALL_TOL: f64 = 1e-9;
const NEWTON_MAX_ITER: usize = 80;
/// Imaginary part threshold for counting a root as real.
const REAL_IM_TOL: f64 = 1e-6;
/// Two restriction roots this close (relative) certify a tangency.
const TANGENCY_TOL: f64 = 1e-6;
/// Size of the offset applied to split an exactly tied quadrivalent vertex,
/// divided by c before use so the coefficient bump is scale free.
const NODE_SPLIT: f64 = 0.1;
/// Two distinct nodes closer than this abort the continuation.
const TACNODE_SEP: f64 = 1e-6;
/// Relative residual accepted when validating an implicitization.
const IMPLICIT_TOL: f64 = 1e-9;
/// Relative size of the jitter applied to nongeneric contours.
const PERTURB_SCALE: f64 = 1e-9;

// ---------------------------------------------------------------------------
// dense real univariate polynomials, ascending coefficients

fn rp_from_roots(roots: &[f64], lead: f64) -> Vec<f64> {
    let mut c = vec![lead];
    for &r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * r;
        }
        c = next;
    }
    c
}

fn rp_deriv(p: &[f64]) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

fn rp_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn rp_eval_c(p: &[f64], u: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * u + a)
}

fn rp_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn rp_lin(a: &[f64], sa: f64, b: &[f64], sb: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (k, v) in out.iter_mut().enumerate() {
        *v = sa * a.get(k).copied().unwrap_or(0.0) + sb * b.get(k).copied().unwrap_or(0.0);
    }
    out
}

fn rp_unipoly(p: &[f64]) -> UniPoly {
    UniPoly::new(p.iter().map(|&a| Complex64::new(a, 0.0)).collect())
}

/// Sum of multiplicities of roots that are real to within the escape-guarded
/// tolerance. `None` when a root ran off to numerical infinity, which means
/// the restriction degenerated and the line should be resampled.
fn real_root_count(p: &UniPoly) -> Result<Option<usize>> {
    let roots = p.roots()?;
    let mut count = 0;
    for (z, m) in roots {
        if z.norm() > 1e9 {
            return Ok(None);
        }
        if z.im.abs() <= REAL_IM_TOL * (1.0 + z.re.abs()) {
            count += m;
        }
    }
    Ok(Some(count))
}

// ---------------------------------------------------------------------------
// contours

/// Which of the three lattice directions a line or edge runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LineKind {
    /// A line x = value.
    Vertical,
    /// A line y = value.
    Horizontal,
    /// A line x − y = value.
    Diagonal,
}

impl LineKind {
    /// The line coordinate of a point for this direction.
    pub fn coordinate(self, p: (f64, f64)) -> f64 {
        match self {
            LineKind::Vertical => p.0,
            LineKind::Horizontal => p.1,
            LineKind::Diagonal => p.0 - p.1,
        }
    }
}

/// One side of a contour.
#[derive(Clone, Copy, Debug)]
pub struct ContourEdge {
    pub kind: LineKind,
    pub value: f64,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

/// A closed polygon with 3d sides cycling through the horizontal, diagonal
/// and vertical directions, together with its boundary height function:
/// constant along horizontal and vertical sides, rising with the x
/// coordinate along diagonal ones.
///
/// Side i of each family lies on y = βᵢ, x − y = γᵢ, x = αᵢ respectively,
/// and the traversal order is (H₁, D₁, V₁, H₂, ...), counterclockwise.
/// Closure requires Σᵢ (βᵢ + γᵢ − αᵢ) = 0.
#[derive(Clone, Debug)]
pub struct PolygonalContour {
    d: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    anchor: f64,
    corners: Vec<(f64, f64)>,
    heights: Vec<f64>,
    perturbed: bool,
}

fn rho(e: (f64, f64)) -> f64 {
    0f64.max(e.0).max(e.1)
}

fn dist_point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64), eps: f64) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < -eps && d3 * d4 < -eps
}

impl PolygonalContour {
    /// Build and validate a contour from its side coordinates in cyclic
    /// order and the boundary height at the first corner (the one shared by
    /// the last vertical side and the first horizontal one).
    ///
    /// Inputs with repeated or concurrent side lines are jittered by
    /// 1e-9 · diameter with a warning; if that does not restore genericity
    /// the contour is rejected as `NonGeneric`. A traversal that does not
    /// close, or boundary data no surface can span, is `Infeasible`.
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>, anchor: f64) -> Result<Self> {
        let d = alpha.len();
        if d < 2 {
            return Err(Error::DegenerateInput(
                "a contour needs degree at least 2".into(),
            ));
        }
        if beta.len() != d || gamma.len() != d {
            return Err(Error::DegenerateInput(format!(
                "side families must have equal lengths, got {}/{}/{}",
                d,
                beta.len(),
                gamma.len()
            )));
        }
        for v in alpha.iter().chain(&beta).chain(&gamma) {
            if !v.is_finite() {
                return Err(Error::DegenerateInput("non-finite side coordinate".into()));
            }
        }
        let scale = alpha
            .iter()
            .chain(&beta)
            .chain(&gamma)
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let closure: f64 = (0..d).map(|i| beta[i] + gamma[i] - alpha[i]).sum();
        if closure.abs() > 1e-9 * scale {
            return Err(Error::Infeasible(format!(
                "sides do not close: residual {closure:.3e}"
            )));
        }

        let mut alpha = alpha;
        let mut beta = beta;
        let mut gamma = gamma;
        let mut perturbed = false;
        for attempt in 0..2 {
            let contour = Self::assemble(&alpha, &beta, &gamma, anchor, perturbed)?;
            match contour.genericity_defect() {
                None => return Ok(contour),
                Some(defect) => {
                    if attempt == 1 {
                        return Err(Error::NonGeneric(format!(
                            "contour stays degenerate after jitter: {defect}"
                        )));
                    }
                    eprintln!(
                        "warning: nongeneric contour ({defect}); jittering sides by {:.1e}",
                        PERTURB_SCALE * contour.diameter()
                    );
                    let eps = PERTURB_SCALE * contour.diameter();
                    let mut rng = ChaCha8Rng::seed_from_u64(0x706f6c79);
                    for v in alpha.iter_mut().chain(&mut beta).chain(&mut gamma) {
                        *v += eps * rng.gen_range(-1.0..1.0);
                    }
                    let resid: f64 = (0..d).map(|i| beta[i] + gamma[i] - alpha[i]).sum();
                    gamma[d - 1] -= resid;
                    perturbed = true;
                }
            }
        }
        unreachable!("perturbation loop returns or errors");
    }

    fn assemble(
        alpha: &[f64],
        beta: &[f64],
        gamma: &[f64],
        anchor: f64,
        perturbed: bool,
    ) -> Result<Self> {
        let d = alpha.len();
        let mut corners = Vec::with_capacity(3 * d);
        for i in 0..d {
            corners.push((alpha[(i + d - 1) % d], beta[i]));
            corners.push((beta[i] + gamma[i], beta[i]));
            corners.push((alpha[i], alpha[i] - gamma[i]));
        }
        let mut heights = vec![0.0; 3 * d];
        heights[0] = anchor;
        for i in 0..d {
            let b = 3 * i;
            heights[b + 1] = heights[b];
            heights[b + 2] = heights[b + 1] + (corners[b + 2].0 - corners[b + 1].0);
            if b + 3 < 3 * d {
                heights[b + 3] = heights[b + 2];
            }
        }
        let contour = PolygonalContour {
            d,
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            gamma: gamma.to_vec(),
            anchor,
            corners,
            heights,
            perturbed,
        };
        let diam = contour.diameter();
        // the closing vertical side keeps the height constant
        if (contour.heights[3 * d - 1] - anchor).abs() > 1e-9 * (1.0 + diam) {
            return Err(Error::Infeasible(
                "boundary height walk does not close".into(),
            ));
        }
        // counterclockwise orientation
        let area: f64 = (0..3 * d)
            .map(|k| {
                let (x1, y1) = contour.corners[k];
                let (x2, y2) = contour.corners[(k + 1) % (3 * d)];
                x1 * y2 - x2 * y1
            })
            .sum::<f64>()
            / 2.0;
        if area <= 1e-12 * diam * diam {
            return Err(Error::DegenerateInput(
                "contour is not counterclockwise".into(),
            ));
        }
        // simple polygon: no two non-adjacent sides cross
        let n = 3 * d;
        let eps = (1e-12 * diam * diam).powi(2);
        for i in 0..n {
            for j in i + 1..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (a, b) = (contour.corners[i], contour.corners[(i + 1) % n]);
                let (c, dd) = (contour.corners[j], contour.corners[(j + 1) % n]);
                if segments_cross(a, b, c, dd, eps) {
                    return Err(Error::DegenerateInput("contour self-intersects".into()));
                }
            }
        }
        // boundary data must be spannable: the minimal extension stays below
        // the maximal one, which reduces to a check at corner pairs
        let hscale = contour
            .heights
            .iter()
            .fold(1.0f64, |m, h| m.max(h.abs()));
        for k in 0..n {
            for l in 0..n {
                let gap = contour.heights[k] - contour.heights[l]
                    - rho((
                        contour.corners[k].0 - contour.corners[l].0,
                        contour.corners[k].1 - contour.corners[l].1,
                    ));
                if gap > 1e-9 * hscale {
                    return Err(Error::Infeasible(format!(
                        "boundary heights unspannable between corners {k} and {l}"
                    )));
                }
            }
        }
        Ok(contour)
    }

    /// `Some(reason)` when the contour needs a jitter: repeated coordinates
    /// within one side family, a collapsed side, or a taut interior point
    /// where the two extremal surfaces already touch.
    fn genericity_defect(&self) -> Option<String> {
        let diam = self.diameter();
        let tol = 1e-9 * diam;
        for (name, fam) in [("x", &self.alpha), ("y", &self.beta), ("diagonal", &self.gamma)] {
            for i in 0..fam.len() {
                for j in i + 1..fam.len() {
                    if (fam[i] - fam[j]).abs() <= tol {
                        return Some(format!("repeated {name} side at {:.6}", fam[i]));
                    }
                }
            }
        }
        let n = self.corners.len();
        for k in 0..n {
            let a = self.corners[k];
            let b = self.corners[(k + 1) % n];
            if dist_point_segment(a, b, b) <= tol && dist_point_segment(b, a, a) <= tol {
                return Some(format!("collapsed side at corner {k}"));
            }
        }
        // taut interior: min and max extensions agree away from the boundary
        let (lo, hi) = self.bbox();
        let steps = 48;
        for gx in 1..steps {
            for gy in 1..steps {
                let x = lo.0 + (hi.0 - lo.0) * gx as f64 / steps as f64;
                let y = lo.1 + (hi.1 - lo.1) * gy as f64 / steps as f64;
                if !self.contains(x, y) || self.boundary_distance(x, y) < 0.02 * diam {
                    continue;
                }
                if self.extension_gap(x, y) <= 1e-9 * diam {
                    return Some(format!("taut interior point ({x:.4}, {y:.4})"));
                }
            }
        }
        None
    }

    fn extension_gap(&self, x: f64, y: f64) -> f64 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (&(cx, cy), &h) in self.corners.iter().zip(&self.heights) {
            lo = lo.max(h - rho((cx - x, cy - y)));
            hi = hi.min(h + rho((x - cx, y - cy)));
        }
        hi - lo
    }

    /// The regular hexagon scene: side coordinates α=(2,0), β=(0,2),
    /// γ=(1,−1), corners (0,0) through (0,1), boundary heights 0 and 1.
    pub fn hexagon() -> Self {
        Self::new(vec![2.0, 0.0], vec![0.0, 2.0], vec![1.0, -1.0], 0.0)
            .expect("hexagon contour is valid")
    }

    /// The nine-sided heart scene: all nine sides tangent to the cardioid
    /// r = 1 + cos θ rotated by 45°. Three of the exact tangent lines pass
    /// through one point near the cusp; `notch` slides them apart, carving a
    /// small chamfered notch there so the polygon stays simple and generic.
    pub fn heart(notch: f64) -> Result<Self> {
        if !(notch > 0.0) || notch > 1e-2 {
            return Err(Error::Domain(format!(
                "heart notch must be in (0, 1e-2], got {notch}"
            )));
        }
        let s6 = 6f64.sqrt();
        let s2 = 2f64.sqrt();
        let a = (3.0 * s6 + 5.0 * s2) / 8.0;
        let s = -(3.0 * s6 - 5.0 * s2) / 8.0;
        let r = 1.0 / s2;
        let g = 0.75 * s6;
        let alpha = vec![a, -r, s - notch];
        let beta = vec![-r, a, s + notch];
        let gamma = vec![g, -g - 2.0 * notch, 0.0];
        Self::new(alpha, beta, gamma, 0.0)
    }

    /// [`PolygonalContour::heart`] with the default notch.
    pub fn heart9() -> Self {
        Self::heart(HEART_NOTCH).expect("default heart contour is valid")
    }

    /// The contour rotated by 180°, side values negated in place. Its
    /// incidence data at multiplier −c matches this contour's at +c, which
    /// is how negative multipliers are solved.
    pub fn reflected(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        Self::new(
            neg(&self.alpha),
            neg(&self.beta),
            neg(&self.gamma),
            -self.anchor,
        )
        .expect("reflection preserves validity")
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Corners in traversal order, starting where the last vertical side
    /// meets the first horizontal one.
    pub fn corners(&self) -> &[(f64, f64)] {
        &self.corners
    }

    /// Boundary heights at [`corners`](Self::corners).
    pub fn corner_heights(&self) -> &[f64] {
        &self.heights
    }

    /// Whether construction had to jitter the side coordinates.
    pub fn is_perturbed(&self) -> bool {
        self.perturbed
    }

    /// The 3d sides in traversal order.
    pub fn edges(&self) -> Vec<ContourEdge> {
        let n = 3 * self.d;
        (0..self.d)
            .flat_map(|i| {
                let b = 3 * i;
                [
                    ContourEdge {
                        kind: LineKind::Horizontal,
                        value: self.beta[i],
                        from: self.corners[b],
                        to: self.corners[b + 1],
                    },
                    ContourEdge {
                        kind: LineKind::Diagonal,
                        value: self.gamma[i],
                        from: self.corners[b + 1],
                        to: self.corners[b + 2],
                    },
                    ContourEdge {
                        kind: LineKind::Vertical,
                        value: self.alpha[i],
                        from: self.corners[b + 2],
                        to: self.corners[(b + 3) % n],
                    },
                ]
            })
            .collect()
    }

    fn bbox(&self) -> ((f64, f64), (f64, f64)) {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.corners {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        (lo, hi)
    }

    /// Largest distance between two corners.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, &(x1, y1)) in self.corners.iter().enumerate() {
            for &(x2, y2) in &self.corners[i + 1..] {
                best = best.max(((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt());
            }
        }
        best
    }

    /// Area centroid of the enclosed region.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.corners.len();
        let mut area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for k in 0..n {
            let (x1, y1) = self.corners[k];
            let (x2, y2) = self.corners[(k + 1) % n];
            let w = x1 * y2 - x2 * y1;
            area += w;
            cx += (x1 + x2) * w;
            cy += (y1 + y2) * w;
        }
        area /= 2.0;
        (cx / (6.0 * area), cy / (6.0 * area))
    }

    /// Point-in-polygon by crossing count.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.corners.len();
        let mut inside = false;
        for k in 0..n {
            let (x1, y1) = self.corners[k];
            let (x2, y2) = self.corners[(k + 1) % n];
            if (y1 > y) != (y2 > y) {
                let xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
                if xi > x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        let n = self.corners.len();
        (0..n)
            .map(|k| {
                dist_point_segment((x, y), self.corners[k], self.corners[(k + 1) % n])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// extremal piecewise-linear surfaces

/// Which extremal extension of the boundary heights to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// One affine piece of an extremal surface: h = ⟨gradient, (x,y)⟩ + offset
/// on a region containing `witness`. Gradients lie in the unit triangle
/// {(0,0), (1,0), (0,1)}.
#[derive(Clone, Copy, Debug)]
pub struct PlFacet {
    pub gradient: (i64, i64),
    pub offset: f64,
    pub witness: (f64, f64),
}

/// A maximal straight piece of the surface's corner locus, clipped to the
/// contour interior. `valley` records whether the gradient jumps up across
/// the crease in the crossing direction; only valley creases belong to the
/// corner locus that seeds the curve.
#[derive(Clone, Debug)]
pub struct PlCrease {
    pub kind: LineKind,
    pub value: f64,
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub valley: bool,
}

/// An extremal piecewise-linear extension of the boundary heights, with the
/// facet decomposition and corner locus found by scanning the interior.
#[derive(Clone, Debug)]
pub struct PlSurface {
    which: Extremum,
    corners: Vec<(f64, f64)>,
    heights: Vec<f64>,
    pub facets: Vec<PlFacet>,
    pub creases: Vec<PlCrease>,
}

impl PlSurface {
    /// Evaluate the extension. The minimal one is
    /// max over corners b of (h(b) − ρ(b − v)) and the maximal one
    /// min over corners of (h(b) + ρ(v − b)), with ρ(e) = max(0, eₓ, e_y);
    /// a sup over the whole boundary reduces to the corners exactly.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.which {
            Extremum::Min => self
                .corners
                .iter()
                .zip(&self.heights)
                .map(|(&(cx, cy), &h)| h.min(h + x - cx).min(h + y - cy))
                .fold(f64::NEG_INFINITY, f64::max),
            Extremum::Max => self
                .corners
                .iter()
                .zip(&self.heights)
                .map(|(&(cx, cy), &h)| h.max(h + x - cx).max(h + y - cy))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn extremum(&self) -> Extremum {
        self.which
    }

    /// Active affine piece at a point: gradient and offset, exact up to the
    /// tie set of measure zero.
    fn piece(&self, x: f64, y: f64) -> ((i64, i64), f64) {
        let mut best_k = 0;
        let mut best = match self.which {
            Extremum::Min => f64::NEG_INFINITY,
            Extremum::Max => f64::INFINITY,
        };
        for (k, (&(cx, cy), &h)) in self.corners.iter().zip(&self.heights).enumerate() {
            let v = match self.which {
                Extremum::Min => h.min(h + x - cx).min(h + y - cy),
                Extremum::Max => h.max(h + x - cx).max(h + y - cy),
            };
            let better = match self.which {
                Extremum::Min => v > best,
                Extremum::Max => v < best,
            };
            if better {
                best = v;
                best_k = k;
            }
        }
        let (cx, cy) = self.corners[best_k];
        let h = self.heights[best_k];
        let branches = [(h, (0i64, 0i64), h), (h + x - cx, (1, 0), h - cx), (h + y - cy, (0, 1), h - cy)];
        let pick = match self.which {
            Extremum::Min => branches
                .iter()
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .unwrap(),
            Extremum::Max => branches
                .iter()
                .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .unwrap(),
        };
        (pick.1, pick.2)
    }
}

/// Build an extremal extension of the contour's boundary heights and scan
/// its interior for the facet decomposition and corner locus.
pub fn pl_surface(contour: &PolygonalContour, which: Extremum) -> Result<PlSurface> {
    let mut surf = PlSurface {
        which,
        corners: contour.corners().to_vec(),
        heights: contour.corner_heights().to_vec(),
        facets: Vec::new(),
        creases: Vec::new(),
    };
    let diam = contour.diameter();
    let hscale = surf.heights.iter().fold(1.0, |m: f64, h| m.max(h.abs())) + diam;
    for (&c, &h) in surf.corners.iter().zip(&surf.heights) {
        if (surf.eval(c.0, c.1) - h).abs() > 1e-9 * hscale {
            return Err(Error::Infeasible(
                "extension does not interpolate the boundary heights".into(),
            ));
        }
    }

    let quantum = OFFSET_QUANTUM * hscale;
    let key_of = |piece: ((i64, i64), f64)| (piece.0, (piece.1 / quantum).round() as i64);
    let (lo, hi) = contour.bbox();
    let (hx, hy) = (
        (hi.0 - lo.0) / SCAN_N as f64,
        (hi.1 - lo.1) / SCAN_N as f64,
    );
    let margin = CREASE_MARGIN * diam;
    let usable = |x: f64, y: f64| contour.contains(x, y) && contour.boundary_distance(x, y) > margin;

    let mut registry: BTreeMap<((i64, i64), i64), PlFacet> = BTreeMap::new();
    let mut grid = vec![None; (SCAN_N + 1) * (SCAN_N + 1)];
    for gy in 0..=SCAN_N {
        for gx in 0..=SCAN_N {
            let x = lo.0 + hx * gx as f64;
            let y = lo.1 + hy * gy as f64;
            if !usable(x, y) {
                continue;
            }
            let piece = surf.piece(x, y);
            let key = key_of(piece);
            registry.entry(key).or_insert(PlFacet {
                gradient: piece.0,
                offset: piece.1,
                witness: (x, y),
            });
            grid[gy * (SCAN_N + 1) + gx] = Some(key);
        }
    }

    // boundary samples between pieces, located by recursive bisection so
    // several creases crossing one probe are all found
    type Key = ((i64, i64), i64);
    struct Sample {
        left: Key,
        right: Key,
        at: (f64, f64),
        dir: (f64, f64),
    }
    let mut samples: Vec<Sample> = Vec::new();
    // bisection may pass through facets too thin to be hit by any grid
    // point; register those as they are discovered so the samples on their
    // two sides can still be classified
    #[allow(clippy::too_many_arguments)]
    fn locate(
        surf: &PlSurface,
        key_of: &dyn Fn(((i64, i64), f64)) -> ((i64, i64), i64),
        registry: &mut BTreeMap<((i64, i64), i64), PlFacet>,
        p1: (f64, f64),
        k1: ((i64, i64), i64),
        p2: (f64, f64),
        k2: ((i64, i64), i64),
        depth: usize,
        out: &mut Vec<Sample>,
        dir: (f64, f64),
    ) {
        let mid = ((p1.0 + p2.0) / 2.0, (p1.1 + p2.1) / 2.0);
        if depth == 0 {
            out.push(Sample {
                left: k1,
                right: k2,
                at: mid,
                dir,
            });
            return;
        }
        let piece = surf.piece(mid.0, mid.1);
        let km = key_of(piece);
        if km == k1 {
            locate(surf, key_of, registry, mid, k1, p2, k2, depth - 1, out, dir);
        } else if km == k2 {
            locate(surf, key_of, registry, p1, k1, mid, k2, depth - 1, out, dir);
        } else {
            registry.entry(km).or_insert(PlFacet {
                gradient: piece.0,
                offset: piece.1,
                witness: mid,
            });
            locate(surf, key_of, registry, p1, k1, mid, km, depth - 1, out, dir);
            locate(surf, key_of, registry, mid, km, p2, k2, depth - 1, out, dir);
        }
    }
    for gy in 0..=SCAN_N {
        for gx in 0..=SCAN_N {
            let here = grid[gy * (SCAN_N + 1) + gx];
            let Some(k1) = here else { continue };
            let p1 = (lo.0 + hx * gx as f64, lo.1 + hy * gy as f64);
            if gx < SCAN_N {
                if let Some(k2) = grid[gy * (SCAN_N + 1) + gx + 1] {
                    if k2 != k1 {
                        let p2 = (p1.0 + hx, p1.1);
                        locate(&surf, &key_of, &mut registry, p1, k1, p2, k2, SCAN_DEPTH, &mut samples, (1.0, 0.0));
                    }
                }
            }
            if gy < SCAN_N {
                if let Some(k2) = grid[(gy + 1) * (SCAN_N + 1) + gx] {
                    if k2 != k1 {
                        let p2 = (p1.0, p1.1 + hy);
                        locate(&surf, &key_of, &mut registry, p1, k1, p2, k2, SCAN_DEPTH, &mut samples, (0.0, 1.0));
                    }
                }
            }
        }
    }

    // convert located boundary samples into creases grouped by line
    let mut groups: BTreeMap<(LineKind, i64, bool), (f64, Vec<f64>)> = BTreeMap::new();
    for s in samples {
        if !usable(s.at.0, s.at.1) {
            continue;
        }
        let (Some(f1), Some(f2)) = (registry.get(&s.left), registry.get(&s.right)) else {
            continue;
        };
        let dg = (f1.gradient.0 - f2.gradient.0, f1.gradient.1 - f2.gradient.1);
        if dg == (0, 0) {
            continue;
        }
        let (kind, raw_value) = match dg {
            (1, 0) | (-1, 0) => (
                LineKind::Vertical,
                (f2.offset - f1.offset) / dg.0 as f64,
            ),
            (0, 1) | (0, -1) => (
                LineKind::Horizontal,
                (f2.offset - f1.offset) / dg.1 as f64,
            ),
            (1, -1) | (-1, 1) => (
                LineKind::Diagonal,
                (f2.offset - f1.offset) / dg.0 as f64,
            ),
            _ => continue,
        };
        // the located point must actually lie on the tie line
        if (kind.coordinate(s.at) - raw_value).abs() > 1e-6 * (1.0 + diam) {
            continue;
        }
        let rise = (f2.gradient.0 - f1.gradient.0) as f64 * s.dir.0
            + (f2.gradient.1 - f1.gradient.1) as f64 * s.dir.1;
        let valley = rise > 0.0;
        let param = match kind {
            LineKind::Vertical => s.at.1,
            _ => s.at.0,
        };
        let gkey = (kind, (raw_value / quantum).round() as i64, valley);
        let entry = groups.entry(gkey).or_insert((raw_value, Vec::new()));
        entry.1.push(param);
    }
    let pitch = hx.max(hy);
    for ((kind, _, valley), (value, mut params)) in groups {
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (plo, phi) = (params[0], params[params.len() - 1]);
        if phi - plo < pitch {
            continue;
        }
        let (from, to) = match kind {
            LineKind::Vertical => ((value, plo), (value, phi)),
            LineKind::Horizontal => ((plo, value), (phi, value)),
            LineKind::Diagonal => ((plo, plo - value), (phi, phi - value)),
        };
        surf.creases.push(PlCrease {
            kind,
            value,
            from,
            to,
            valley,
        });
    }
    surf.facets = registry.into_values().collect();
    Ok(surf)
}

// ---------------------------------------------------------------------------
// the tropical curve and its seed coefficients

/// An edge of the completed corner locus: a segment or ray on one of the
/// three line directions, separating two coefficient chambers.
#[derive(Clone, Debug)]
pub struct TropEdge {
    pub kind: LineKind,
    pub value: f64,
    /// The two chamber monomials this edge separates.
    pub chambers: ((i32, i32), (i32, i32)),
    pub from: (f64, f64),
    /// `None` for rays.
    pub to: Option<(f64, f64)>,
    /// Primitive direction; ascending along segments, outgoing for rays.
    pub direction: (i32, i32),
}

/// A quadrivalent vertex where four chambers forming a unit lattice square
/// meet; it stands for a node of the curve and is split by a small offset
/// bump whose sign is settled by the winding test.
#[derive(Clone, Debug)]
pub struct TropNode {
    pub position: (f64, f64),
    /// Lower-left monomial of the lattice square.
    pub base: (i32, i32),
    pub resolution: Option<i8>,
}

/// One chamber of the complement, tagged by its monomial.
#[derive(Clone, Copy, Debug)]
pub struct TropChamber {
    pub monomial: (i32, i32),
    pub witness: (f64, f64),
}

/// The min-plus curve T(x, y) = min over monomials of (i·x + j·y + t_ij)
/// completed from the corner locus of the minimal surface, together with
/// everything needed to seed coefficients: edges, vertices, nodes and one
/// chamber per lattice point of the degree-d triangle.
#[derive(Clone, Debug)]
pub struct TropicalCurveQ {
    d: usize,
    t: BTreeMap<(i32, i32), f64>,
    pub edges: Vec<TropEdge>,
    pub vertices: Vec<(f64, f64)>,
    pub nodes: Vec<TropNode>,
    pub chambers: Vec<TropChamber>,
}

impl TropicalCurveQ {
    pub fn degree(&self) -> usize {
        self.d
    }

    /// The affine offset t_ij of a monomial chamber.
    pub fn offset(&self, i: i32, j: i32) -> Option<f64> {
        self.t.get(&(i, j)).copied()
    }

    /// Evaluate the min-plus polynomial.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.t
            .iter()
            .map(|(&(i, j), &t)| i as f64 * x + j as f64 * y + t)
            .fold(f64::INFINITY, f64::min)
    }

    fn seed_from_offsets(&self, c: f64, t: &BTreeMap<(i32, i32), f64>) -> BiPoly {
        let tmin = t.values().fold(f64::INFINITY, |m, &v| m.min(v));
        let terms: Vec<(i32, i32, f64)> = t
            .iter()
            .map(|(&(i, j), &tij)| {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                (i, j, sign * (-c * (tij - tmin)).exp())
            })
            .collect();
        BiPoly::from_f64_terms(&terms)
    }

    /// Seed coefficients at multiplier c: magnitudes e^{-c·t_ij} normalized
    /// so the largest is 1, signs alternating like (−1)^{i+j} so the axis
    /// crossings land on the positive half-axes.
    pub fn seed(&self, c: f64) -> BiPoly {
        self.seed_from_offsets(c, &self.t)
    }

    fn split_offsets(&self, c: f64, signs: &[i8]) -> BTreeMap<(i32, i32), f64> {
        let mut t = self.t.clone();
        for (node, &sg) in self.nodes.iter().zip(signs) {
            let key = (node.base.0, node.base.1 + 1);
            *t.get_mut(&key).expect("node corner exists") += sg as f64 * NODE_SPLIT / c.abs();
        }
        t
    }

    /// Settle every quadrivalent vertex: try both offset bumps and keep the
    /// one whose seed passes the winding test at multiplier c. Ambiguity in
    /// either direction is an error, as the curve family is then not pinned.
    pub fn resolve_nodes(&mut self, c: f64) -> Result<()> {
        if self.nodes.is_empty() {
            return Ok(());
        }
        let interior = self
            .chambers
            .iter()
            .find(|ch| {
                ch.monomial.0 > 0
                    && ch.monomial.1 > 0
                    && (ch.monomial.0 + ch.monomial.1) < self.d as i32
            })
            .ok_or_else(|| Error::NonGeneric("no interior chamber for the winding center".into()))?;
        let center = (
            (-c * interior.witness.0).exp(),
            (-c * interior.witness.1).exp(),
        );
        let n = self.nodes.len();
        let mut passing: Vec<Vec<i8>> = Vec::new();
        for mask in 0..(1u32 << n) {
            let signs: Vec<i8> = (0..n)
                .map(|k| if mask & (1 << k) != 0 { 1 } else { -1 })
                .collect();
            let q = self.seed_from_offsets(c, &self.split_offsets(c, &signs));
            if poly_winding_ok(&q, center, self.d, 64, 0x5eed_0001)? {
                passing.push(signs);
            }
        }
        match passing.len() {
            0 => Err(Error::WindingLost {
                c,
                msg: "no node resolution yields a winding seed".into(),
            }),
            1 => {
                for (node, &sg) in self.nodes.iter_mut().zip(&passing[0]) {
                    node.resolution = Some(sg);
                }
                Ok(())
            }
            _ => Err(Error::NonGeneric(
                "ambiguous node resolution: several sign choices wind".into(),
            )),
        }
    }

    /// Seed coefficients with every node split by its resolved bump.
    pub fn seed_resolved(&self, c: f64) -> Result<BiPoly> {
        let signs: Result<Vec<i8>> = self
            .nodes
            .iter()
            .map(|n| {
                n.resolution.ok_or_else(|| {
                    Error::NonGeneric("node resolution not settled; call resolve_nodes".into())
                })
            })
            .collect();
        Ok(self.seed_from_offsets(c, &self.split_offsets(c, &signs?)))
    }
}

/// Restrict a polynomial to the line p0 + t·dir.
fn line_restriction(q: &BiPoly, p0: (f64, f64), dir: (f64, f64)) -> UniPoly {
    let (imax, jmax) = q.max_exponents();
    let deg = (imax + jmax).max(1) as usize;
    let mut acc = vec![Complex64::new(0.0, 0.0); deg + 1];
    let binom = |n: i32, k: i32| -> f64 {
        let mut v = 1.0;
        for t in 0..k {
            v = v * (n - t) as f64 / (t + 1) as f64;
        }
        v
    };
    for &(i, j, coef) in q.f64_terms() {
        // (p0x + t dx)^i convolved with (p0y + t dy)^j
        let mut zi = vec![0.0; (i + 1) as usize];
        for (k, z) in zi.iter_mut().enumerate() {
            *z = binom(i, k as i32) * p0.0.powi(i - k as i32) * dir.0.powi(k as i32);
        }
        let mut wj = vec![0.0; (j + 1) as usize];
        for (k, w) in wj.iter_mut().enumerate() {
            *w = binom(j, k as i32) * p0.1.powi(j - k as i32) * dir.1.powi(k as i32);
        }
        for (ki, &zz) in zi.iter().enumerate() {
            for (kj, &ww) in wj.iter().enumerate() {
                acc[ki + kj] += coef * zz * ww;
            }
        }
    }
    UniPoly::new(acc)
}

/// Every line through `center` must meet the curve in exactly d real points.
fn poly_winding_ok(
    q: &BiPoly,
    center: (f64, f64),
    d: usize,
    lines: usize,
    seed: u64,
) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = 0;
    let mut resamples = 0;
    while k < lines {
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let p = line_restriction(q, center, (phi.cos(), phi.sin()));
        match real_root_count(&p)? {
            None => {
                resamples += 1;
                if resamples > 3 * lines {
                    return Ok(false);
                }
            }
            Some(n) => {
                if n != d {
                    return Ok(false);
                }
                k += 1;
            }
        }
    }
    Ok(true)
}

/// Build the completed corner-locus curve of a contour and the offsets that
/// seed the coefficient polynomial.
///
/// Boundary offsets come from the side coordinates of each family sorted in
/// decreasing order, which is forced: the restriction of the min-plus
/// polynomial to each axis direction must break exactly at the side
/// positions, and its increments must be concave. Interior offsets (one for
/// degree 3) are recovered from the measured valley creases of the minimal
/// surface; every candidate implied by a crease is validated against the
/// whole measured locus and exactly one must survive.
pub fn tropical_q(contour: &PolygonalContour) -> Result<TropicalCurveQ> {
    let d = contour.degree();
    let di = d as i32;
    let scale = 1.0 + contour.diameter()
        + contour
            .alpha()
            .iter()
            .chain(contour.beta())
            .chain(contour.gamma())
            .fold(0.0f64, |m, v| m.max(v.abs()));

    let mut sv = contour.alpha().to_vec();
    let mut sh = contour.beta().to_vec();
    let mut sd = contour.gamma().to_vec();
    for list in [&mut sv, &mut sh, &mut sd] {
        list.sort_by(|a, b| b.partial_cmp(a).unwrap());
    }

    let mut t: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    t.insert((0, 0), 0.0);
    for i in 0..d {
        let prev = t[&(i as i32, 0)];
        t.insert((i as i32 + 1, 0), prev - sv[i]);
    }
    for j in 0..d {
        let prev = t[&(0, j as i32)];
        t.insert((0, j as i32 + 1), prev - sh[j]);
    }
    let mut diag = t[&(0, di)];
    for i in 0..d {
        diag -= sd[i];
        let key = (i as i32 + 1, di - i as i32 - 1);
        match t.get(&key) {
            Some(&known) => {
                if (known - diag).abs() > 1e-9 * scale {
                    return Err(Error::NonGeneric(format!(
                        "offset recursions disagree at {key:?}: {known} vs {diag}"
                    )));
                }
            }
            None => {
                t.insert(key, diag);
            }
        }
    }

    // interior offsets
    if d == 3 {
        let surface = pl_surface(contour, Extremum::Min)?;
        let measured: Vec<&PlCrease> = surface.creases.iter().filter(|c| c.valley).collect();
        if measured.is_empty() {
            return Err(Error::NonGeneric(
                "no interior valley creases to pin the interior offset".into(),
            ));
        }
        let mut candidates: Vec<f64> = Vec::new();
        for cr in &measured {
            let v = cr.value;
            let pair = match cr.kind {
                LineKind::Vertical => [t[&(0, 1)] - v, t[&(2, 1)] + v],
                LineKind::Horizontal => [t[&(1, 0)] - v, t[&(1, 2)] + v],
                LineKind::Diagonal => [t[&(2, 0)] + v, t[&(0, 2)] - v],
            };
            for cand in pair {
                if !candidates.iter().any(|&c| (c - cand).abs() <= 1e-12 * scale) {
                    candidates.push(cand);
                }
            }
        }
        let mut valid: Vec<f64> = Vec::new();
        for &cand in &candidates {
            let mut trial = t.clone();
            trial.insert((1, 1), cand);
            if creases_lie_on_locus(&measured, &trial, di, scale) {
                valid.push(cand);
            }
        }
        match valid.len() {
            1 => {
                t.insert((1, 1), valid[0]);
            }
            0 => {
                return Err(Error::NonGeneric(
                    "no interior offset is consistent with the measured creases".into(),
                ))
            }
            _ => {
                return Err(Error::NonGeneric(
                    "interior offset is ambiguous from the measured creases".into(),
                ))
            }
        }
    } else if d > 3 {
        return Err(Error::Domain(format!(
            "interior corner-locus offsets are only implemented through degree 3, got {d}"
        )));
    }

    build_curve(d, t, contour, scale)
}

/// Every measured valley crease must sit on a tie edge of the trial offsets:
/// same direction, same line value, and the two tied monomials must attain
/// the global minimum at the crease midpoint.
fn creases_lie_on_locus(
    measured: &[&PlCrease],
    t: &BTreeMap<(i32, i32), f64>,
    d: i32,
    scale: f64,
) -> bool {
    let value_at = |x: f64, y: f64, i: i32, j: i32| i as f64 * x + j as f64 * y + t[&(i, j)];
    let global_min = |x: f64, y: f64| {
        t.keys()
            .map(|&(i, j)| value_at(x, y, i, j))
            .fold(f64::INFINITY, f64::min)
    };
    'crease: for cr in measured {
        let mid = (
            (cr.from.0 + cr.to.0) / 2.0,
            (cr.from.1 + cr.to.1) / 2.0,
        );
        for (&(i, j), _) in t.iter() {
            let (other, tie) = match cr.kind {
                LineKind::Vertical => ((i + 1, j), t.get(&(i + 1, j)).map(|&t2| t[&(i, j)] - t2)),
                LineKind::Horizontal => ((i, j + 1), t.get(&(i, j + 1)).map(|&t2| t[&(i, j)] - t2)),
                LineKind::Diagonal => {
                    // pair {(i+1, j), (i, j+1)} relative to base (i, j)
                    if i + 1 + j > d || i + j + 1 > d {
                        ((0, 0), None)
                    } else {
                        match (t.get(&(i + 1, j)), t.get(&(i, j + 1))) {
                            (Some(&tse), Some(&tnw)) => ((i + 1, j), Some(tnw - tse)),
                            _ => ((0, 0), None),
                        }
                    }
                }
            };
            let Some(tie_value) = tie else { continue };
            if other.0 + other.1 > d {
                continue;
            }
            if (tie_value - cr.value).abs() > VALUE_TOL * scale {
                continue;
            }
            let (m1, m2) = match cr.kind {
                LineKind::Vertical => ((i, j), (i + 1, j)),
                LineKind::Horizontal => ((i, j), (i, j + 1)),
                LineKind::Diagonal => ((i + 1, j), (i, j + 1)),
            };
            let v1 = value_at(mid.0, mid.1, m1.0, m1.1);
            let v2 = value_at(mid.0, mid.1, m2.0, m2.1);
            let gm = global_min(mid.0, mid.1);
            if (v1 - gm).abs() <= VALUE_TOL * scale && (v2 - gm).abs() <= VALUE_TOL * scale {
                continue 'crease;
            }
        }
        return false;
    }
    true
}

/// Enumerate the tie locus of the offsets exactly: for every adjacent
/// monomial pair intersect the half-plane constraints from all other
/// monomials, keep nondegenerate intervals, then cluster endpoints into
/// vertices, detect lattice-square nodes, and find one witness per chamber.
fn build_curve(
    d: usize,
    t: BTreeMap<(i32, i32), f64>,
    contour: &PolygonalContour,
    scale: f64,
) -> Result<TropicalCurveQ> {
    let di = d as i32;
    let min_len = 1e-9 * scale;
    let mut edges: Vec<TropEdge> = Vec::new();

    let monomials: Vec<(i32, i32)> = t.keys().copied().collect();
    let mut pairs: Vec<(LineKind, (i32, i32), (i32, i32))> = Vec::new();
    for &(i, j) in &monomials {
        if i + 1 + j <= di {
            pairs.push((LineKind::Vertical, (i, j), (i + 1, j)));
        }
        if i + j + 1 <= di {
            pairs.push((LineKind::Horizontal, (i, j), (i, j + 1)));
        }
        if i + 1 + j <= di && i + j + 1 <= di {
            pairs.push((LineKind::Diagonal, (i + 1, j), (i, j + 1)));
        }
    }

    for (kind, m1, m2) in pairs {
        // the tie line, parametrized by y on vertical lines and x otherwise
        let value = match kind {
            LineKind::Vertical | LineKind::Horizontal => t[&m1] - t[&m2],
            LineKind::Diagonal => t[&m2] - t[&m1],
        };
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut empty = false;
        for &(p, q) in &monomials {
            if (p, q) == m1 || (p, q) == m2 {
                continue;
            }
            // (value of (p,q)) − (pair value) = a·param + b must stay ≥ 0
            let (a, b) = match kind {
                LineKind::Vertical => (
                    q - m1.1,
                    (p - m1.0) as f64 * value + t[&(p, q)] - t[&m1],
                ),
                LineKind::Horizontal => (
                    p - m1.0,
                    (q - m1.1) as f64 * value + t[&(p, q)] - t[&m1],
                ),
                LineKind::Diagonal => (
                    (p - m1.0) + (q - m1.1),
                    (m1.1 - q) as f64 * value + t[&(p, q)] - t[&m1],
                ),
            };
            // diagonal lines use x as parameter with y = x − value; the
            // diagonal coefficient above already folds that in
            if a > 0 {
                lo = lo.max(-b / a as f64);
            } else if a < 0 {
                hi = hi.min(-b / a as f64);
            } else if b < -min_len {
                empty = true;
                break;
            }
        }
        if empty || hi - lo <= min_len {
            continue;
        }
        if lo.is_infinite() && hi.is_infinite() {
            return Err(Error::NonGeneric(
                "a tie line is never dominated; offsets degenerate".into(),
            ));
        }
        let point_at = |p: f64| match kind {
            LineKind::Vertical => (value, p),
            LineKind::Horizontal => (p, value),
            LineKind::Diagonal => (p, p - value),
        };
        let ray_dir = match kind {
            LineKind::Vertical => (0, 1),
            LineKind::Horizontal => (1, 0),
            LineKind::Diagonal => (1, 1),
        };
        if hi.is_infinite() {
            edges.push(TropEdge {
                kind,
                value,
                chambers: (m1, m2),
                from: point_at(lo),
                to: None,
                direction: ray_dir,
            });
        } else if lo.is_infinite() {
            edges.push(TropEdge {
                kind,
                value,
                chambers: (m1, m2),
                from: point_at(hi),
                to: None,
                direction: (-ray_dir.0, -ray_dir.1),
            });
        } else {
            edges.push(TropEdge {
                kind,
                value,
                chambers: (m1, m2),
                from: point_at(lo),
                to: Some(point_at(hi)),
                direction: ray_dir,
            });
        }
    }

    // rays must point north, east or southwest: the three directions dual to
    // the triangle's sides
    for e in &edges {
        if e.to.is_none() {
            let ok = matches!(
                (e.kind, e.direction),
                (LineKind::Vertical, (0, 1))
                    | (LineKind::Horizontal, (1, 0))
                    | (LineKind::Diagonal, (-1, -1))
            );
            if !ok {
                return Err(Error::NonGeneric(format!(
                    "unexpected ray direction {:?} on a {:?} line",
                    e.direction, e.kind
                )));
            }
        }
    }

    // cluster endpoints into vertices
    let ctol = VERTEX_TOL * scale;
    let mut vertices: Vec<(f64, f64)> = Vec::new();
    let mut incidence: Vec<Vec<(usize, bool)>> = Vec::new(); // (edge, at_from)
    {
        let mut add = |p: (f64, f64), e: usize, at_from: bool| {
            for (k, v) in vertices.iter().enumerate() {
                if (v.0 - p.0).abs() <= ctol && (v.1 - p.1).abs() <= ctol {
                    incidence[k].push((e, at_from));
                    return;
                }
            }
            vertices.push(p);
            incidence.push(vec![(e, at_from)]);
        };
        for (k, e) in edges.iter().enumerate() {
            add(e.from, k, true);
            if let Some(p) = e.to {
                add(p, k, false);
            }
        }
    }

    // balance and collect nodes
    let mut nodes: Vec<TropNode> = Vec::new();
    for (v, inc) in vertices.iter().zip(&incidence) {
        let mut sum = (0i32, 0i32);
        let mut bounded = 0usize;
        let mut outgoing: Vec<(i32, i32)> = Vec::new();
        for &(e, at_from) in inc {
            let dir = if at_from {
                edges[e].direction
            } else {
                (-edges[e].direction.0, -edges[e].direction.1)
            };
            sum = (sum.0 + dir.0, sum.1 + dir.1);
            outgoing.push(dir);
            if edges[e].to.is_some() {
                bounded += 1;
            }
        }
        if sum != (0, 0) {
            return Err(Error::NonGeneric(format!(
                "corner locus unbalanced at ({:.4}, {:.4})",
                v.0, v.1
            )));
        }
        match inc.len() {
            3 => {
                // a trivalent vertex with three bounded edges must not open
                // toward north/east/southwest; the surface could be pushed
                // down there, contradicting volume minimality
                if bounded == 3 {
                    let mut dirs = outgoing.clone();
                    dirs.sort();
                    if dirs == vec![(-1, -1), (0, 1), (1, 0)] {
                        return Err(Error::NonGeneric(format!(
                            "local-minimum vertex at ({:.4}, {:.4})",
                            v.0, v.1
                        )));
                    }
                }
            }
            4 => {
                let mut square: Vec<(i32, i32)> = Vec::new();
                for &(e, _) in inc {
                    for m in [edges[e].chambers.0, edges[e].chambers.1] {
                        if !square.contains(&m) {
                            square.push(m);
                        }
                    }
                }
                square.sort();
                if square.len() != 4 {
                    return Err(Error::NonGeneric(
                        "quadrivalent vertex without a lattice square".into(),
                    ));
                }
                let base = square[0];
                let want = vec![
                    base,
                    (base.0, base.1 + 1),
                    (base.0 + 1, base.1),
                    (base.0 + 1, base.1 + 1),
                ];
                let mut want_sorted = want.clone();
                want_sorted.sort();
                if square != want_sorted {
                    return Err(Error::NonGeneric(
                        "quadrivalent vertex chambers are not a unit square".into(),
                    ));
                }
                nodes.push(TropNode {
                    position: *v,
                    base,
                    resolution: None,
                });
            }
            n if n < 3 => {
                return Err(Error::NonGeneric(format!(
                    "dangling corner-locus vertex at ({:.4}, {:.4})",
                    v.0, v.1
                )))
            }
            _ => {
                return Err(Error::NonGeneric(
                    "vertex of valence above four; offsets degenerate".into(),
                ))
            }
        }
    }

    // ray values must reproduce the side coordinates exactly
    for (kind, want) in [
        (LineKind::Vertical, contour.alpha()),
        (LineKind::Horizontal, contour.beta()),
        (LineKind::Diagonal, contour.gamma()),
    ] {
        let mut got: Vec<f64> = edges
            .iter()
            .filter(|e| e.to.is_none() && e.kind == kind)
            .map(|e| e.value)
            .collect();
        let mut want = want.to_vec();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ok = got.len() == want.len()
            && got
                .iter()
                .zip(&want)
                .all(|(g, w)| (g - w).abs() <= 1e-9 * scale);
        if !ok {
            return Err(Error::NonGeneric(format!(
                "rays on {kind:?} lines sit at {got:?}, sides at {want:?}"
            )));
        }
    }

    // one witness per chamber, searched on a widened box
    let (lo, hi) = contour.bbox();
    let pad = 2.0 * contour.diameter() + 1.0;
    let steps = 256;
    let mut best: BTreeMap<(i32, i32), (f64, (f64, f64))> = BTreeMap::new();
    for gy in 0..=steps {
        for gx in 0..=steps {
            let x = lo.0 - pad + (hi.0 - lo.0 + 2.0 * pad) * gx as f64 / steps as f64;
            let y = lo.1 - pad + (hi.1 - lo.1 + 2.0 * pad) * gy as f64 / steps as f64;
            let mut vals: Vec<((i32, i32), f64)> = t
                .iter()
                .map(|(&(i, j), &tij)| ((i, j), i as f64 * x + j as f64 * y + tij))
                .collect();
            vals.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let margin = vals[1].1 - vals[0].1;
            let key = vals[0].0;
            if best.get(&key).map(|&(m, _)| margin > m).unwrap_or(true) {
                best.insert(key, (margin, (x, y)));
            }
        }
    }
    let expected = (d + 1) * (d + 2) / 2;
    let chambers: Vec<TropChamber> = best
        .iter()
        .filter(|(_, &(margin, _))| margin > 1e-8 * scale)
        .map(|(&monomial, &(_, witness))| TropChamber { monomial, witness })
        .collect();
    if chambers.len() != expected {
        return Err(Error::NonGeneric(format!(
            "found {} chambers, expected {expected}",
            chambers.len()
        )));
    }

    Ok(TropicalCurveQ {
        d,
        t,
        edges,
        vertices,
        nodes,
        chambers,
    })
}

// ---------------------------------------------------------------------------
// the inscribed curve: rational parametrization and Newton continuation

/// A self-crossing of the inscribed curve: two circle parameters with the
/// same image point.
#[derive(Clone, Copy, Debug)]
pub struct CurveNode {
    pub u: f64,
    pub v: f64,
    pub zeta: f64,
    pub omega: f64,
}

/// The degree-d curve inscribed in a contour at volume multiplier `cvol`,
/// held as a real rational parametrization
/// ζ(u) = A·Π(u−aᵢ)/Π(u−cⱼ), ω(u) = B·Π(u−bᵢ)/Π(u−cⱼ)
/// gauged by a₁ = 0, b₁ = 1, c₁ = ∞ (so the denominator has degree d−1 and
/// leading coefficient C = 1), plus the expanded coefficient polynomial.
#[derive(Clone, Debug)]
pub struct InscribedCurveQ {
    d: usize,
    sign_a: f64,
    sign_b: f64,
    log_a: f64,
    log_b: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    cden: Vec<f64>,
    beta_of_a: Vec<usize>,
    alpha_of_b: Vec<usize>,
    gamma_of_c: Vec<usize>,
    cvol: f64,
    zpoly: Vec<f64>,
    wpoly: Vec<f64>,
    ypoly: Vec<f64>,
    pub poly: BiPoly,
    pub nodes: Vec<CurveNode>,
}

/// What to continue from: the tropical seed of the contour or a previously
/// solved curve (same contour, same multiplier sign).
pub enum Seed<'a> {
    Tropical(&'a TropicalCurveQ),
    Curve(&'a InscribedCurveQ),
}

impl InscribedCurveQ {
    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn cvol(&self) -> f64 {
        self.cvol
    }

    /// Leading constant of the ζ numerator.
    pub fn coeff_a(&self) -> f64 {
        self.sign_a * self.log_a.exp()
    }

    /// Leading constant of the ω numerator.
    pub fn coeff_b(&self) -> f64 {
        self.sign_b * self.log_b.exp()
    }

    /// Leading constant of the shared denominator; pinned to 1 by the gauge.
    pub fn coeff_c(&self) -> f64 {
        1.0
    }

    /// Parameters where ζ vanishes (ω-axis crossings); a₁ = 0.
    pub fn params_a(&self) -> &[f64] {
        &self.a
    }

    /// Parameters where ω vanishes (ζ-axis crossings); b₁ = 1.
    pub fn params_b(&self) -> &[f64] {
        &self.b
    }

    /// Denominator parameters (points at infinity); c₁ = ∞ is `None`.
    pub fn params_c(&self) -> Vec<Option<f64>> {
        let mut out = vec![None];
        out.extend(self.cden.iter().map(|&v| Some(v)));
        out
    }

    /// Point on the curve at a complex parameter.
    pub fn point(&self, u: Complex64) -> (Complex64, Complex64) {
        let y = rp_eval_c(&self.ypoly, u);
        (rp_eval_c(&self.zpoly, u) / y, rp_eval_c(&self.wpoly, u) / y)
    }

    /// Point at a real parameter, if finite.
    pub fn point_real(&self, u: f64) -> Option<(f64, f64)> {
        let y = rp_eval(&self.ypoly, u);
        if y.abs() < 1e-300 {
            return None;
        }
        let z = rp_eval(&self.zpoly, u) / y;
        let w = rp_eval(&self.wpoly, u) / y;
        (z.is_finite() && w.is_finite()).then_some((z, w))
    }

    /// Largest absolute incidence residual in logarithmic form, re-matching
    /// each axis crossing and asymptotic direction to its nearest target.
    pub fn incidence_residual(&self, contour: &PolygonalContour) -> f64 {
        let state = ParamState::from_curve(self);
        let (res, ok) = state.residual(self.cvol, contour, true);
        if !ok {
            return f64::INFINITY;
        }
        res.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Check that `lines` random lines through the image of the contour
    /// centroid meet the curve in exactly d real points and `general`
    /// unanchored random lines in at least d − 2.
    pub fn winding_certificate(
        &self,
        contour: &PolygonalContour,
        lines: usize,
        general: usize,
        seed: u64,
    ) -> Result<()> {
        let state = ParamState::from_curve(self);
        state.winding_probe(self.cvol, contour, lines, general, seed)
    }

    /// Check that the curve is tangent, in the dual sense, to all 3d side
    /// lines: the pencil restriction through each incidence point has a
    /// coalescing double root there and no third root nearby.
    pub fn tangency_certificate(&self, contour: &PolygonalContour) -> Result<()> {
        let state = ParamState::from_curve(self);
        state.tangency_certs(self.cvol, contour)
    }

    /// Scene-plane point of the frozen-boundary envelope at parameter u for
    /// the single-lozenge spectral curve z + w = 1. Returns `None` off the
    /// physical arc, where the envelope formulas leave the real domain.
    pub fn lozenge_boundary_point(&self, u: f64) -> Option<(f64, f64)> {
        let zv = rp_eval(&self.zpoly, u);
        let wv = rp_eval(&self.wpoly, u);
        let yv = rp_eval(&self.ypoly, u);
        let zd = rp_eval(&rp_deriv(&self.zpoly), u);
        let wd = rp_eval(&rp_deriv(&self.wpoly), u);
        let yd = rp_eval(&rp_deriv(&self.ypoly), u);
        // the Wronskian combinations are pole free in the polynomial values
        let e = zv * wd - wv * zd;
        let ex = e / (wd * yv - wv * yd);
        let ey = -e / (zd * yv - zv * yd);
        if !(ex > 0.0 && ey > 0.0 && ex.is_finite() && ey.is_finite()) {
            return None;
        }
        Some((-ex.ln() / self.cvol, -ey.ln() / self.cvol))
    }

    /// Sweep the parameter circle and keep the physical envelope arc.
    pub fn lozenge_boundary_samples(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .filter_map(|k| {
                let tau = (k as f64 + 0.5) / n as f64;
                let u = (std::f64::consts::PI * (tau - 0.5)).tan();
                self.lozenge_boundary_point(u)
            })
            .collect()
    }

    /// Serialize as the documented shape: the parametrization constants and
    /// lists (with `null` for the gauge pole at infinity), the multiplier,
    /// and the expanded coefficient polynomial as (i, j, coefficient) rows.
    pub fn to_json(&self) -> serde_json::Value {
        let c_list: Vec<serde_json::Value> = self
            .params_c()
            .into_iter()
            .map(|v| match v {
                None => serde_json::Value::Null,
                Some(x) => json!(x),
            })
            .collect();
        let poly_rows: Vec<serde_json::Value> = self
            .poly
            .f64_terms()
            .iter()
            .map(|&(i, j, c)| json!([i, j, c]))
            .collect();
        json!({
            "A": self.coeff_a(),
            "B": self.coeff_b(),
            "C": self.coeff_c(),
            "a": self.a,
            "b": self.b,
            "c": c_list,
            "cvol": self.cvol,
            "poly": poly_rows,
        })
    }
}

/// Mutable solver state behind [`InscribedCurveQ`].
#[derive(Clone, Debug)]
struct ParamState {
    d: usize,
    sign_a: f64,
    sign_b: f64,
    log_a: f64,
    log_b: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    cden: Vec<f64>,
    beta_of_a: Vec<usize>,
    alpha_of_b: Vec<usize>,
    gamma_of_c: Vec<usize>,
    node_u: Vec<(f64, f64)>,
}

impl ParamState {
    fn from_curve(q: &InscribedCurveQ) -> Self {
        ParamState {
            d: q.d,
            sign_a: q.sign_a,
            sign_b: q.sign_b,
            log_a: q.log_a,
            log_b: q.log_b,
            a: q.a.clone(),
            b: q.b.clone(),
            cden: q.cden.clone(),
            beta_of_a: q.beta_of_a.clone(),
            alpha_of_b: q.alpha_of_b.clone(),
            gamma_of_c: q.gamma_of_c.clone(),
            node_u: q.nodes.iter().map(|n| (n.u, n.v)).collect(),
        }
    }

    fn polys(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            rp_from_roots(&self.a, self.sign_a * self.log_a.exp()),
            rp_from_roots(&self.b, self.sign_b * self.log_b.exp()),
            rp_from_roots(&self.cden, 1.0),
        )
    }

    /// Log-magnitude and sign of a product Π |u − rᵢ|.
    fn log_prod(u: f64, roots: &[f64]) -> Option<(f64, f64)> {
        let mut lg = 0.0;
        let mut sign = 1.0;
        for &r in roots {
            let dlt = u - r;
            if dlt.abs() < 1e-300 {
                return None;
            }
            lg += dlt.abs().ln();
            if dlt < 0.0 {
                sign = -sign;
            }
        }
        Some((lg, sign))
    }

    /// Incidence residuals in logarithmic form. With `full` the redundant
    /// final slope condition is included (diagnostics); the Newton system
    /// drops it. The flag reports whether every condition has the right
    /// sign: axis crossings on the positive half-axes, slopes negative.
    fn residual(&self, c: f64, contour: &PolygonalContour, full: bool) -> (Vec<f64>, bool) {
        let mut out = Vec::with_capacity(3 * self.d);
        let mut ok = true;
        for (k, &ak) in self.a.iter().enumerate() {
            match (Self::log_prod(ak, &self.b), Self::log_prod(ak, &self.cden)) {
                (Some((lb, sb)), Some((lc, sc))) => {
                    if self.sign_b * sb * sc <= 0.0 {
                        ok = false;
                    }
                    out.push(self.log_b + lb - lc + c * contour.beta()[self.beta_of_a[k]]);
                }
                _ => {
                    ok = false;
                    out.push(f64::INFINITY);
                }
            }
        }
        for (k, &bk) in self.b.iter().enumerate() {
            match (Self::log_prod(bk, &self.a), Self::log_prod(bk, &self.cden)) {
                (Some((la, sa)), Some((lc, sc))) => {
                    if self.sign_a * sa * sc <= 0.0 {
                        ok = false;
                    }
                    out.push(self.log_a + la - lc + c * contour.alpha()[self.alpha_of_b[k]]);
                }
                _ => {
                    ok = false;
                    out.push(f64::INFINITY);
                }
            }
        }
        if self.sign_a * self.sign_b >= 0.0 {
            ok = false;
        }
        out.push(self.log_b - self.log_a - c * contour.gamma()[self.gamma_of_c[0]]);
        let included = if full { self.d - 1 } else { self.d - 2 };
        for j in 0..included {
            let cj = self.cden[j];
            match (Self::log_prod(cj, &self.b), Self::log_prod(cj, &self.a)) {
                (Some((lb, sb)), Some((la, sa))) => {
                    if self.sign_a * self.sign_b * sa * sb >= 0.0 {
                        ok = false;
                    }
                    out.push(
                        self.log_b + lb - (self.log_a + la)
                            - c * contour.gamma()[self.gamma_of_c[j + 1]],
                    );
                }
                _ => {
                    ok = false;
                    out.push(f64::INFINITY);
                }
            }
        }
        (out, ok)
    }

    /// Analytic Jacobian of the (3d − 1)-row system in the unknowns
    /// [log A, log B, a₂.., b₂.., c₂..].
    fn jacobian(&self, _c: f64) -> DMatrix<f64> {
        let d = self.d;
        let n = 3 * d - 1;
        let mut j = DMatrix::zeros(n, n);
        let col_a = |k: usize| 2 + (k - 1);
        let col_b = |k: usize| 2 + (d - 1) + (k - 1);
        let col_c = |k: usize| 2 + 2 * (d - 1) + k;
        let mut row = 0;
        for (k, &ak) in self.a.iter().enumerate() {
            j[(row, 1)] = 1.0; // log B
            let mut self_term = 0.0;
            for (m, &bm) in self.b.iter().enumerate() {
                let inv = 1.0 / (ak - bm);
                self_term += inv;
                if m >= 1 {
                    j[(row, col_b(m))] = -inv;
                }
            }
            for (m, &cm) in self.cden.iter().enumerate() {
                let inv = 1.0 / (ak - cm);
                self_term -= inv;
                j[(row, col_c(m))] = inv;
            }
            if k >= 1 {
                j[(row, col_a(k))] = self_term;
            }
            row += 1;
        }
        for (k, &bk) in self.b.iter().enumerate() {
            j[(row, 0)] = 1.0; // log A
            let mut self_term = 0.0;
            for (m, &am) in self.a.iter().enumerate() {
                let inv = 1.0 / (bk - am);
                self_term += inv;
                if m >= 1 {
                    j[(row, col_a(m))] = -inv;
                }
            }
            for (m, &cm) in self.cden.iter().enumerate() {
                let inv = 1.0 / (bk - cm);
                self_term -= inv;
                j[(row, col_c(m))] = inv;
            }
            if k >= 1 {
                j[(row, col_b(k))] = self_term;
            }
            row += 1;
        }
        j[(row, 0)] = -1.0;
        j[(row, 1)] = 1.0;
        row += 1;
        for jj in 0..self.d - 2 {
            let cj = self.cden[jj];
            j[(row, 0)] = -1.0;
            j[(row, 1)] = 1.0;
            let mut self_term = 0.0;
            for (m, &bm) in self.b.iter().enumerate() {
                let inv = 1.0 / (cj - bm);
                self_term += inv;
                if m >= 1 {
                    j[(row, col_b(m))] = -inv;
                }
            }
            for (m, &am) in self.a.iter().enumerate() {
                let inv = 1.0 / (cj - am);
                self_term -= inv;
                if m >= 1 {
                    j[(row, col_a(m))] = inv;
                }
            }
            j[(row, col_c(jj))] = self_term;
            row += 1;
        }
        debug_assert_eq!(row, n);
        j
    }

    fn apply_step(&mut self, step: &DVector<f64>, lambda: f64) {
        let d = self.d;
        self.log_a -= lambda * step[0];
        self.log_b -= lambda * step[1];
        for k in 1..d {
            self.a[k] -= lambda * step[2 + (k - 1)];
            self.b[k] -= lambda * step[2 + (d - 1) + (k - 1)];
        }
        for k in 0..d - 1 {
            self.cden[k] -= lambda * step[2 + 2 * (d - 1) + k];
        }
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Damped Newton on the incidence conditions at fixed multiplier c.
    fn newton_solve(&mut self, c: f64, contour: &PolygonalContour) -> Result<()> {
        let (r0, ok0) = self.residual(c, contour, false);
        if !ok0 {
            return Err(Error::Convergence {
                context: "incidence solve entered with wrong-signed conditions".into(),
                iterations: 0,
                residual: Self::max_abs(&r0),
                best: Vec::new(),
            });
        }
        let mut rnorm = Self::max_abs(&r0);
        let mut rvec = r0;
        // the dropped redundant condition must hold on its own
        let certify = |state: &Self, it: usize| -> Result<()> {
            let (full, _) = state.residual(c, contour, true);
            let extra = full[full.len() - 1].abs();
            if state.d >= 2 && extra > 1e-8 {
                return Err(Error::Convergence {
                    context: "redundant incidence condition fails".into(),
                    iterations: it,
                    residual: extra,
                    best: Vec::new(),
                });
            }
            Ok(())
        };
        for it in 0..NEWTON_MAX_ITER {
            if rnorm < NEWTON_TOL {
                return certify(self, it);
            }
            let jac = self.jacobian(c);
            let rhs = DVector::from_column_slice(&rvec);
            let step = jac.lu().solve(&rhs).ok_or(Error::Convergence {
                context: "incidence Jacobian is singular".into(),
                iterations: it,
                residual: rnorm,
                best: Vec::new(),
            })?;
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 2f64.powi(-14) {
                let mut trial = self.clone();
                trial.apply_step(&step, lambda);
                let (r, ok) = trial.residual(c, contour, false);
                let rn = Self::max_abs(&r);
                if ok && rn <= rnorm * (1.0 - 0.25 * lambda) {
                    *self = trial;
                    rvec = r;
                    rnorm = rn;
                    accepted = true;
                    break;
                }
                lambda /= 2.0;
            }
            if !accepted {
                // a stall at the rounding floor still counts as converged
                if rnorm < NEWTON_STALL_TOL {
                    return certify(self, it);
                }
                return Err(Error::Convergence {
                    context: "incidence Newton stalled".into(),
                    iterations: it,
                    residual: rnorm,
                    best: Vec::new(),
                });
            }
        }
        if rnorm < NEWTON_STALL_TOL {
            return certify(self, NEWTON_MAX_ITER);
        }
        Err(Error::Convergence {
            context: "incidence Newton ran out of iterations".into(),
            iterations: NEWTON_MAX_ITER,
            residual: rnorm,
            best: Vec::new(),
        })
    }

    /// Winding probe through the image of the contour centroid plus a few
    /// unanchored lines; parallel over lines.
    fn winding_probe(
        &self,
        c: f64,
        contour: &PolygonalContour,
        lines: usize,
        general: usize,
        seed: u64,
    ) -> Result<()> {
        let (zp, wp, yp) = self.polys();
        let (cx, cy) = contour.centroid();
        let center = ((-c * cx).exp(), (-c * cy).exp());
        let d = self.d;
        let check = |k: usize| -> Result<()> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e3779b9));
            for _attempt in 0..4 {
                let through_center = k < lines;
                let (la, lb, lc) = if through_center {
                    let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                    let (sa, sb) = (phi.sin(), -phi.cos());
                    (sa, sb, -(sa * center.0 + sb * center.1))
                } else {
                    let la: f64 = rng.gen_range(-1.0..1.0);
                    let lb: f64 = rng.gen_range(-1.0..1.0);
                    let span = la.abs() * center.0 + lb.abs() * center.1;
                    (la, lb, rng.gen_range(-1.5..1.5) * span)
                };
                let h = rp_lin(
                    &rp_lin(&zp, la, &wp, lb),
                    1.0,
                    &yp,
                    lc,
                );
                match real_root_count(&rp_unipoly(&h))? {
                    None => continue,
                    Some(n) => {
                        let pass = if through_center { n == d } else { n + 2 >= d };
                        if !pass {
                            return Err(Error::WindingLost {
                                c,
                                msg: format!(
                                    "line ({la:.4})ζ + ({lb:.4})ω + ({lc:.4}) meets {n} of {d} real points"
                                ),
                            });
                        }
                        return Ok(());
                    }
                }
            }
            Err(Error::WindingLost {
                c,
                msg: "winding probe could not find a nondegenerate line".into(),
            })
        };
        (0..lines + general)
            .into_par_iter()
            .map(check)
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    /// Tangency certificates: for each incidence point p the pencil
    /// condition det[φ(u), φ′(u), p] vanishes doubly at the touching
    /// parameter. Two nearest roots must coalesce and no third may crowd in.
    fn tangency_certs(&self, c: f64, contour: &PolygonalContour) -> Result<()> {
        let (zp, wp, yp) = self.polys();
        let (zd, wd, yd) = (rp_deriv(&zp), rp_deriv(&wp), rp_deriv(&yp));
        // Wronskian combinations of the homogeneous parametrization
        let wy = rp_lin(&rp_mul(&wp, &yd), 1.0, &rp_mul(&yp, &wd), -1.0);
        let zy = rp_lin(&rp_mul(&zp, &yd), 1.0, &rp_mul(&yp, &zd), -1.0);
        let zw = rp_lin(&rp_mul(&zp, &wd), 1.0, &rp_mul(&wp, &zd), -1.0);
        let mut checks: Vec<(Vec<f64>, Option<f64>)> = Vec::new(); // (pencil poly, param or None for ∞)
        for (k, &ak) in self.a.iter().enumerate() {
            let omega = (-c * contour.beta()[self.beta_of_a[k]]).exp();
            checks.push((rp_lin(&zy, -omega, &zw, 1.0), Some(ak)));
        }
        for (k, &bk) in self.b.iter().enumerate() {
            let zeta = (-c * contour.alpha()[self.alpha_of_b[k]]).exp();
            checks.push((rp_lin(&wy, zeta, &zw, 1.0), Some(bk)));
        }
        for (j, gidx) in self.gamma_of_c.iter().enumerate() {
            let slope = -(c * contour.gamma()[*gidx]).exp();
            let g = rp_lin(&wy, 1.0, &zy, -slope);
            if j == 0 {
                // the pole at infinity: look at the reversed polynomial near 0
                let rev: Vec<f64> = g.iter().rev().copied().collect();
                checks.push((rev, None));
            } else {
                checks.push((g, Some(self.cden[j - 1])));
            }
        }
        for (g, at) in checks {
            let p = rp_unipoly(&g);
            if p.degree() < 2 {
                return Err(Error::WindingLost {
                    c,
                    msg: "tangency pencil degenerated".into(),
                });
            }
            let target = at.unwrap_or(0.0);
            let roots = p.roots()?;
            let mut flat: Vec<Complex64> = Vec::new();
            for (z, m) in roots {
                for _ in 0..m {
                    flat.push(z);
                }
            }
            flat.sort_by(|x, y| {
                (x - target)
                    .norm()
                    .partial_cmp(&(y - target).norm())
                    .unwrap()
            });
            if flat.len() < 2 {
                return Err(Error::WindingLost {
                    c,
                    msg: "tangency pencil lost its double root".into(),
                });
            }
            let gap = (flat[0] - flat[1]).norm();
            let tol = TANGENCY_TOL * (1.0 + target.abs());
            if gap > tol {
                return Err(Error::WindingLost {
                    c,
                    msg: format!(
                        "tangency at parameter {target:.6} split by {gap:.3e} (tolerance {tol:.1e})"
                    ),
                });
            }
            if flat.len() > 2 {
                let third = (flat[2] - target).norm();
                if third < 10.0 * gap.max(1e-12) {
                    return Err(Error::WindingLost {
                        c,
                        msg: format!("third pencil root within {third:.3e} of a tangency"),
                    });
                }
            }
        }
        Ok(())
    }

    fn rational_at(&self, polys: &(Vec<f64>, Vec<f64>, Vec<f64>), u: f64) -> (f64, f64) {
        let y = rp_eval(&polys.2, u);
        (rp_eval(&polys.0, u) / y, rp_eval(&polys.1, u) / y)
    }

    /// Refresh a node parameter pair by Newton on φ(u) = φ(v).
    fn refine_node(&self, start: (f64, f64)) -> Result<(f64, f64)> {
        let polys = self.polys();
        let (zd, wd, yd) = (
            rp_deriv(&polys.0),
            rp_deriv(&polys.1),
            rp_deriv(&polys.2),
        );
        let dz = |u: f64| {
            let y = rp_eval(&polys.2, u);
            (rp_eval(&zd, u) * y - rp_eval(&polys.0, u) * rp_eval(&yd, u)) / (y * y)
        };
        let dw = |u: f64| {
            let y = rp_eval(&polys.2, u);
            (rp_eval(&wd, u) * y - rp_eval(&polys.1, u) * rp_eval(&yd, u)) / (y * y)
        };
        let (mut u, mut v) = start;
        for _ in 0..40 {
            let (z1, w1) = self.rational_at(&polys, u);
            let (z2, w2) = self.rational_at(&polys, v);
            let scale = 1.0 + z1.abs() + w1.abs();
            let res = ((z1 - z2).powi(2) + (w1 - w2).powi(2)).sqrt();
            if res < 1e-12 * scale {
                if (u - v).abs() < 1e-9 * (1.0 + u.abs()) {
                    return Err(Error::Convergence {
                        context: "node parameters collided".into(),
                        iterations: 0,
                        residual: (u - v).abs(),
                        best: Vec::new(),
                    });
                }
                return Ok((u, v));
            }
            let det = -dz(u) * dw(v) + dw(u) * dz(v);
            if det.abs() < 1e-300 {
                break;
            }
            let du = (-(z1 - z2) * dw(v) + (w1 - w2) * dz(v)) / det;
            let dv = (-dz(u) * (w1 - w2) + dw(u) * (z1 - z2)) / det;
            u -= du;
            v -= dv;
            if !(u.is_finite() && v.is_finite()) {
                break;
            }
        }
        Err(Error::Convergence {
            context: "node refinement did not converge".into(),
            iterations: 40,
            residual: f64::NAN,
            best: Vec::new(),
        })
    }

    fn refresh_nodes(&mut self, c: f64) -> Result<()> {
        let mut refined = Vec::with_capacity(self.node_u.len());
        for &pair in &self.node_u {
            refined.push(self.refine_node(pair)?);
        }
        // two distinct nodes approaching each other end the continuation
        let polys = self.polys();
        let pts: Vec<(f64, f64)> = refined
            .iter()
            .map(|&(u, _)| self.rational_at(&polys, u))
            .collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let sep = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                if sep < TACNODE_SEP {
                    return Err(Error::TacnodeApproach { c, separation: sep });
                }
            }
        }
        self.node_u = refined;
        Ok(())
    }

    /// Expanded coefficient polynomial by least squares on curve samples.
    fn implicitize(&self) -> Result<BiPoly> {
        let d = self.d as i32;
        let polys = self.polys();
        let mut samples: Vec<(Complex64, Complex64)> = Vec::new();
        let circle = |r: f64, n: usize, out: &mut Vec<(Complex64, Complex64)>| {
            for k in 0..n {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.37;
                let u = Complex64::from_polar(r, th);
                let y = rp_eval_c(&polys.2, u);
                if y.norm() < 1e-10 {
                    continue;
                }
                out.push((rp_eval_c(&polys.0, u) / y, rp_eval_c(&polys.1, u) / y));
            }
        };
        circle(0.8, 24, &mut samples);
        circle(2.2, 24, &mut samples);
        for k in 0..16 {
            let u = -3.47 + 6.94 * (k as f64 + 0.5) / 16.0;
            let y = rp_eval(&polys.2, u);
            if y.abs() < 1e-8 {
                continue;
            }
            let z = rp_eval(&polys.0, u) / y;
            let w = rp_eval(&polys.1, u) / y;
            if z.is_finite() && w.is_finite() {
                samples.push((Complex64::new(z, 0.0), Complex64::new(w, 0.0)));
            }
        }
        let monos: Vec<(i32, i32)> = (0..=d)
            .flat_map(|i| (0..=(d - i)).map(move |j| (i, j)))
            .collect();
        let ncol = monos.len();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * samples.len());
        for &(z, w) in &samples {
            let mut re = Vec::with_capacity(ncol);
            let mut im = Vec::with_capacity(ncol);
            for &(i, j) in &monos {
                let v = z.powi(i) * w.powi(j);
                re.push(v.re);
                im.push(v.im);
            }
            rows.push(re);
            rows.push(im);
        }
        // column equilibration keeps the exponential coefficient spread
        // from swamping the nullspace
        let mut colscale = vec![0.0f64; ncol];
        for row in &rows {
            for (k, &v) in row.iter().enumerate() {
                colscale[k] = colscale[k].max(v.abs());
            }
        }
        for s in colscale.iter_mut() {
            if *s < 1e-300 {
                *s = 1.0;
            }
        }
        let mat = DMatrix::from_fn(rows.len(), ncol, |r, c| rows[r][c] / colscale[c]);
        let svd = mat.clone().svd(false, true);
        let vt = svd.v_t.ok_or(Error::DegenerateElimination(
            "implicitization SVD failed".into(),
        ))?;
        let null = vt.row(ncol - 1);
        let mut coeffs: Vec<(i32, i32, f64)> = monos
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| (i, j, null[k] / colscale[k]))
            .collect();
        let maxc = coeffs.iter().fold(0.0f64, |m, &(_, _, c)| m.max(c.abs()));
        if maxc < 1e-300 {
            return Err(Error::DegenerateElimination(
                "implicitization produced the zero polynomial".into(),
            ));
        }
        let q00 = coeffs
            .iter()
            .find(|&&(i, j, _)| (i, j) == (0, 0))
            .map(|&(_, _, c)| c)
            .unwrap_or(0.0);
        let flip = if q00.abs() > 1e-12 * maxc {
            q00.signum()
        } else {
            1.0
        };
        for c in coeffs.iter_mut() {
            c.2 /= flip * maxc;
        }
        let q = BiPoly::from_f64_terms(&coeffs);
        // validate on fresh parameters
        let mut worst = 0.0f64;
        for k in 0..24 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 24.0 + 0.11;
            let u = Complex64::from_polar(1.4, th);
            let y = rp_eval_c(&polys.2, u);
            if y.norm() < 1e-10 {
                continue;
            }
            let z = rp_eval_c(&polys.0, u) / y;
            let w = rp_eval_c(&polys.1, u) / y;
            let mut val = Complex64::new(0.0, 0.0);
            let mut bound = 0.0;
            for &(i, j, c) in q.f64_terms() {
                let m = z.powi(i) * w.powi(j);
                val += c * m;
                bound += c.abs() * m.norm();
            }
            worst = worst.max(val.norm() / bound.max(1e-300));
        }
        if worst > IMPLICIT_TOL {
            return Err(Error::DegenerateElimination(format!(
                "implicit form misses the curve by {worst:.3e}"
            )));
        }
        Ok(q)
    }

    fn to_curve(&self, cvol: f64, poly: BiPoly) -> InscribedCurveQ {
        let polys = self.polys();
        let nodes = self
            .node_u
            .iter()
            .map(|&(u, v)| {
                let (z, w) = self.rational_at(&polys, u);
                CurveNode {
                    u,
                    v,
                    zeta: z,
                    omega: w,
                }
            })
            .collect();
        InscribedCurveQ {
            d: self.d,
            sign_a: self.sign_a,
            sign_b: self.sign_b,
            log_a: self.log_a,
            log_b: self.log_b,
            a: self.a.clone(),
            b: self.b.clone(),
            cden: self.cden.clone(),
            beta_of_a: self.beta_of_a.clone(),
            alpha_of_b: self.alpha_of_b.clone(),
            gamma_of_c: self.gamma_of_c.clone(),
            cvol,
            zpoly: polys.0,
            wpoly: polys.1,
            ypoly: polys.2,
            poly,
            nodes,
        }
    }
}

// --------------------------------------------------------------------------
// seeding: from the tropical coefficients to a parametrization

/// Best bijection between measured values and targets in log space.
fn match_targets(measured: &[f64], targets: &[f64]) -> Result<Vec<usize>> {
    let n = measured.len();
    if targets.len() != n {
        return Err(Error::DegenerateInput("target count mismatch".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    // n ≤ 3 for the supported seeds, so full enumeration is exact and cheap
    let mut stack = vec![(perm.clone(), 0usize)];
    while let Some((p, k)) = stack.pop() {
        if k == n {
            let cost: f64 = (0..n).map(|i| (measured[i] - targets[p[i]]).abs()).sum();
            if best.as_ref().map(|(bc, _)| cost < *bc).unwrap_or(true) {
                best = Some((cost, p.clone()));
            }
            continue;
        }
        for swap in k..n {
            let mut q = p.clone();
            q.swap(k, swap);
            stack.push((q, k + 1));
        }
    }
    perm = best.expect("nonempty permutation set").1;
    Ok(perm)
}

/// Shared tail of the seed extractions: given raw numerator and denominator
/// polynomials of the parametrization, match each root family to its
/// incidence targets, move the gauge triple to (0, 1, ∞), and rebuild the
/// factored representation.
fn assemble_state(
    raw_z: &[f64],
    raw_w: &[f64],
    raw_y: &[f64],
    contour: &PolygonalContour,
    c: f64,
    raw_nodes: &[(f64, f64)],
) -> Result<ParamState> {
    let d = contour.degree();
    let real_roots = |p: &[f64], what: &str| -> Result<Vec<f64>> {
        let roots = rp_unipoly(p).roots()?;
        let mut out = Vec::new();
        for (z, m) in roots {
            if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
                return Err(Error::HomotopyStuck {
                    c,
                    msg: format!("seed {what} has a complex branch point at {z}"),
                });
            }
            for _ in 0..m {
                out.push(z.re);
            }
        }
        Ok(out)
    };
    let za = real_roots(raw_z, "numerator")?;
    let wb = real_roots(raw_w, "numerator")?;
    let yc = real_roots(raw_y, "denominator")?;
    if za.len() != d || wb.len() != d || yc.len() != d {
        return Err(Error::HomotopyStuck {
            c,
            msg: "seed parametrization has wrong degrees".into(),
        });
    }

    // match every root to its incidence target by log magnitude
    let eval = |p: &[f64], u: f64| rp_eval(p, u);
    let mut omega_at_a = Vec::with_capacity(d);
    for &u in &za {
        let w = eval(raw_w, u) / eval(raw_y, u);
        if !(w > 0.0) {
            return Err(Error::HomotopyStuck {
                c,
                msg: format!("seed ω-axis crossing at {w:.3e} is not positive"),
            });
        }
        omega_at_a.push(w.ln());
    }
    let beta_targets: Vec<f64> = contour.beta().iter().map(|&b| -c * b).collect();
    let beta_of_a = match_targets(&omega_at_a, &beta_targets)?;

    let mut zeta_at_b = Vec::with_capacity(d);
    for &u in &wb {
        let z = eval(raw_z, u) / eval(raw_y, u);
        if !(z > 0.0) {
            return Err(Error::HomotopyStuck {
                c,
                msg: format!("seed ζ-axis crossing at {z:.3e} is not positive"),
            });
        }
        zeta_at_b.push(z.ln());
    }
    let alpha_targets: Vec<f64> = contour.alpha().iter().map(|&a| -c * a).collect();
    let alpha_of_b = match_targets(&zeta_at_b, &alpha_targets)?;

    let mut slope_at_c = Vec::with_capacity(d);
    for &u in &yc {
        let s = eval(raw_w, u) / eval(raw_z, u);
        if !(s < 0.0) {
            return Err(Error::HomotopyStuck {
                c,
                msg: format!("seed asymptotic slope {s:.3e} is not negative"),
            });
        }
        slope_at_c.push(s.abs().ln());
    }
    let gamma_targets: Vec<f64> = contour.gamma().iter().map(|&g| c * g).collect();
    let gamma_of_c = match_targets(&slope_at_c, &gamma_targets)?;

    // gauge: the denominator root carrying the largest diagonal target goes
    // to infinity; the cyclically following a and b roots go to 0 and 1
    let gmax = (0..d)
        .max_by(|&i, &j| {
            contour.gamma()[gamma_of_c[i]]
                .partial_cmp(&contour.gamma()[gamma_of_c[j]])
                .unwrap()
        })
        .unwrap();
    #[derive(Clone, Copy, PartialEq)]
    enum Fam {
        A,
        B,
        C,
    }
    let mut ring: Vec<(f64, Fam, usize)> = Vec::new();
    for (k, &u) in za.iter().enumerate() {
        ring.push((u, Fam::A, k));
    }
    for (k, &u) in wb.iter().enumerate() {
        ring.push((u, Fam::B, k));
    }
    for (k, &u) in yc.iter().enumerate() {
        ring.push((u, Fam::C, k));
    }
    ring.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let start = ring
        .iter()
        .position(|&(_, f, k)| f == Fam::C && k == gmax)
        .expect("gauge root is present");
    // parameters must interlace as (c, a, b) repeating around the circle
    for step in 0..3 * d {
        let fam = ring[(start + step) % (3 * d)].1;
        let want = match step % 3 {
            0 => Fam::C,
            1 => Fam::A,
            _ => Fam::B,
        };
        if fam != want {
            return Err(Error::NonGeneric(
                "seed parameters do not interlace cyclically".into(),
            ));
        }
    }
    let c1 = ring[start].0;
    let a1 = ring[(start + 1) % (3 * d)].0;
    let b1 = ring[(start + 2) % (3 * d)].0;
    let moebius = |u: f64| (u - a1) * (b1 - c1) / ((u - c1) * (b1 - a1));

    // order each family gauge-first along the circle 0 → +∞ → −∞ → 0
    let ckey = |u: f64| {
        let t = u.atan();
        if t >= -1e-18 {
            t
        } else {
            t + std::f64::consts::PI
        }
    };
    let map_family = |roots: &[f64], targets: &[usize], skip: Option<usize>| {
        let mut items: Vec<(f64, usize)> = roots
            .iter()
            .enumerate()
            .filter(|&(k, _)| Some(k) != skip)
            .map(|(k, &u)| (moebius(u), targets[k]))
            .collect();
        items.sort_by(|x, y| ckey(x.0).partial_cmp(&ckey(y.0)).unwrap());
        items
    };
    let a_idx = za.iter().position(|&u| u == a1).unwrap();
    let b_idx = wb.iter().position(|&u| u == b1).unwrap();
    let fam_a = {
        let mut v = vec![(0.0, beta_of_a[a_idx])];
        v.extend(map_family(&za, &beta_of_a, Some(a_idx)));
        v
    };
    let fam_b = {
        let mut v = vec![(1.0, alpha_of_b[b_idx])];
        v.extend(map_family(&wb, &alpha_of_b, Some(b_idx)));
        v
    };
    let c_idx = yc
        .iter()
        .position(|&u| (u - c1).abs() < 1e-300 || u == c1)
        .unwrap();
    let fam_c = map_family(&yc, &gamma_of_c, Some(c_idx));

    let a: Vec<f64> = fam_a.iter().map(|&(u, _)| u).collect();
    let b: Vec<f64> = fam_b.iter().map(|&(u, _)| u).collect();
    let cden: Vec<f64> = fam_c.iter().map(|&(u, _)| u).collect();
    let beta_assign: Vec<usize> = fam_a.iter().map(|&(_, t)| t).collect();
    let alpha_assign: Vec<usize> = fam_b.iter().map(|&(_, t)| t).collect();
    let mut gamma_assign: Vec<usize> = vec![gamma_of_c[c_idx]];
    gamma_assign.extend(fam_c.iter().map(|&(_, t)| t));

    // scale constants by matching values at a point away from all roots
    let inv_moebius = |v: f64| (c1 * (b1 - a1) * v - a1 * (b1 - c1)) / ((b1 - a1) * v - (b1 - c1));
    let mut v0 = 0.5;
    let mut best_sep = -1.0;
    for cand in [-2.3, -1.1, -0.45, 0.31, 0.5, 0.77, 1.62, 2.9] {
        let sep = a
            .iter()
            .chain(&b)
            .chain(&cden)
            .fold(f64::INFINITY, |m, &r| m.min((cand - r).abs()));
        if sep > best_sep {
            best_sep = sep;
            v0 = cand;
        }
    }
    let u0 = inv_moebius(v0);
    let z0 = eval(raw_z, u0) / eval(raw_y, u0);
    let w0 = eval(raw_w, u0) / eval(raw_y, u0);
    let prody: f64 = cden.iter().map(|&r| v0 - r).product();
    let proda: f64 = a.iter().map(|&r| v0 - r).product();
    let prodb: f64 = b.iter().map(|&r| v0 - r).product();
    let aa = z0 * prody / proda;
    let bb = w0 * prody / prodb;
    if !(aa.is_finite() && bb.is_finite()) || aa == 0.0 || bb == 0.0 {
        return Err(Error::HomotopyStuck {
            c,
            msg: "seed gauge normalization degenerated".into(),
        });
    }
    let state = ParamState {
        d,
        sign_a: aa.signum(),
        sign_b: bb.signum(),
        log_a: aa.abs().ln(),
        log_b: bb.abs().ln(),
        a,
        b,
        cden,
        beta_of_a: beta_assign,
        alpha_of_b: alpha_assign,
        gamma_of_c: gamma_assign,
        node_u: raw_nodes.iter().map(|&(u, v)| (moebius(u), moebius(v))).collect(),
    };
    // cross-check the rebuilt parametrization against the raw one
    let polys = state.polys();
    let v1 = v0 * 0.83 + 0.05;
    let u1 = inv_moebius(v1);
    let (zc, wc) = state.rational_at(&polys, v1);
    let zr = eval(raw_z, u1) / eval(raw_y, u1);
    let wr = eval(raw_w, u1) / eval(raw_y, u1);
    if (zc - zr).abs() > 1e-6 * (1.0 + zr.abs()) || (wc - wr).abs() > 1e-6 * (1.0 + wr.abs()) {
        return Err(Error::HomotopyStuck {
            c,
            msg: "seed gauge change did not reproduce the curve".into(),
        });
    }
    Ok(state)
}

/// Parametrize a seed conic by the pencil of lines through one of its
/// ζ-axis crossings.
fn extract_conic(q: &BiPoly, contour: &PolygonalContour, c: f64) -> Result<ParamState> {
    let coef = |i: i32, j: i32| {
        q.f64_terms()
            .iter()
            .find(|&&(ti, tj, _)| ti == i && tj == j)
            .map(|&(_, _, v)| v)
            .unwrap_or(0.0)
    };
    let (q00, q10, q01) = (coef(0, 0), coef(1, 0), coef(0, 1));
    let (q20, q02, q11) = (coef(2, 0), coef(0, 2), coef(1, 1));
    let axis = rp_unipoly(&[q00, q10, q20]);
    let roots = axis.roots()?;
    let mut zeta0 = None;
    for (z, _) in roots {
        if z.im.abs() < 1e-8 * (1.0 + z.re.abs()) && z.re > 0.0 {
            zeta0 = Some(zeta0.map_or(z.re, |best: f64| best.max(z.re)));
        }
    }
    let zeta0 = zeta0.ok_or(Error::HomotopyStuck {
        c,
        msg: "seed conic misses the positive ζ axis".into(),
    })?;
    // substitute ω = u (ζ − ζ₀); the second intersection is rational in u
    let denom = [q20, q11, q02];
    let cpoly = [q00, -q01 * zeta0, q02 * zeta0 * zeta0];
    let lin = [
        -(2.0 * q20 * zeta0 * zeta0 + q10 * zeta0),
        -(q11 * zeta0 * zeta0 + q01 * zeta0),
    ];
    let raw_z: Vec<f64> = cpoly.iter().map(|&v| v / zeta0).collect();
    let raw_w = vec![0.0, lin[0] / zeta0, lin[1] / zeta0];
    assemble_state(&raw_z, &raw_w, &denom, contour, c, &[])
}

/// Parametrize a resolved seed cubic through its near node: find the
/// critical point, drop the constant of the shifted cubic (the projection
/// onto the exactly nodal neighbor), and sweep lines through the node.
fn extract_nodal_cubic(
    q: &BiPoly,
    contour: &PolygonalContour,
    c: f64,
    node_hint: (f64, f64),
) -> Result<ParamState> {
    let dz_poly = |p: &BiPoly| {
        let terms: Vec<(i32, i32, f64)> = p
            .f64_terms()
            .iter()
            .filter(|&&(i, _, _)| i > 0)
            .map(|&(i, j, v)| (i - 1, j, v * i as f64))
            .collect();
        BiPoly::from_f64_terms(&terms)
    };
    let dw_poly = |p: &BiPoly| {
        let terms: Vec<(i32, i32, f64)> = p
            .f64_terms()
            .iter()
            .filter(|&&(_, j, _)| j > 0)
            .map(|&(i, j, v)| (i, j - 1, v * j as f64))
            .collect();
        BiPoly::from_f64_terms(&terms)
    };
    let qz = dz_poly(q);
    let qw = dw_poly(q);
    let (mut z, mut w) = ((-c * node_hint.0).exp(), (-c * node_hint.1).exp());
    let cdot = |p: &BiPoly, z: f64, w: f64| {
        p.eval_and_derivs(Complex64::new(z, 0.0), Complex64::new(w, 0.0))
            .map(|(v, dz, dw)| (v.re, dz.re, dw.re))
    };
    let mut converged = false;
    for _ in 0..60 {
        let (fz, fzz, fzw) = cdot(&qz, z, w)?;
        let (fw, fwz, fww) = cdot(&qw, z, w)?;
        let det = fzz * fww - fzw * fwz;
        if det.abs() < 1e-300 {
            break;
        }
        let du = (fz * fww - fw * fzw) / det;
        let dv = (fzz * fw - fwz * fz) / det;
        z -= du;
        w -= dv;
        if du.abs() + dv.abs() < 1e-14 * (1.0 + z.abs() + w.abs()) {
            converged = true;
            break;
        }
    }
    if !converged || !(z > 0.0 && w > 0.0) {
        return Err(Error::HomotopyStuck {
            c,
            msg: "critical point of the seed cubic did not converge".into(),
        });
    }
    // exact cubic Taylor coefficients at the critical point
    let qzz = dz_poly(&qz);
    let qzw = dw_poly(&qz);
    let qww = dw_poly(&qw);
    let (h20, h30, h21) = cdot(&qzz, z, w).map(|(v, a, b)| (v, a, b))?;
    let (h11, _h21b, h12) = cdot(&qzw, z, w)?;
    let (h02, _h12b, h03) = cdot(&qww, z, w)?;
    // Q(z+s, w+t) − Q(z,w) = Q2(s,t) + Q3(s,t) with Q2 = ½(h20 s² + 2 h11 st + h02 t²)
    let q2 = [0.5 * h20, h11, 0.5 * h02];
    let q3 = [h30 / 6.0, h21 / 2.0, h12 / 2.0, h03 / 6.0];
    // lines t = u·s through the node: s(u) = −Q2(1,u)/Q3(1,u)
    let raw_y = q3.to_vec();
    let raw_z = rp_lin(&raw_y, z, &[q2[0], q2[1], q2[2], 0.0], -1.0);
    let raw_w = rp_lin(&raw_y, w, &[0.0, q2[0], q2[1], q2[2]], -1.0);
    // the node parameters are the two directions where Q2 vanishes
    let disc = q2[1] * q2[1] - 4.0 * q2[0] * q2[2];
    if disc <= 0.0 {
        return Err(Error::HomotopyStuck {
            c,
            msg: "seed node is not a real crossing".into(),
        });
    }
    let sq = disc.sqrt();
    let node_pair = (
        (-q2[1] - sq) / (2.0 * q2[2]),
        (-q2[1] + sq) / (2.0 * q2[2]),
    );
    assemble_state(&raw_z, &raw_w, &raw_y, contour, c, &[node_pair])
}

/// Extract and polish a parametrization from the tropical seed at its own
/// multiplier. Node resolutions are settled by the winding test first; if
/// the nodal extraction still fails the flipped bumps are tried.
fn seed_state(trop: &TropicalCurveQ, contour: &PolygonalContour, c0: f64) -> Result<ParamState> {
    let d = trop.degree();
    let mut trop = trop.clone();
    trop.resolve_nodes(c0)?;
    let attempt = |t: &TropicalCurveQ| -> Result<ParamState> {
        let q = t.seed_resolved(c0)?;
        let mut state = match d {
            2 => extract_conic(&q, contour, c0)?,
            3 => {
                let hint = t.nodes.first().map(|n| n.position).unwrap_or_else(|| {
                    let c = contour.centroid();
                    (c.0, c.1)
                });
                extract_nodal_cubic(&q, contour, c0, hint)?
            }
            _ => {
                return Err(Error::HomotopyStuck {
                    c: c0,
                    msg: format!("tropical seeding implemented through degree 3, got {d}"),
                })
            }
        };
        state.newton_solve(c0, contour)?;
        state.winding_probe(c0, contour, 32, 8, 0x5eed_0002)?;
        state.tangency_certs(c0, contour)?;
        state.refresh_nodes(c0)?;
        Ok(state)
    };
    match attempt(&trop) {
        Ok(state) => Ok(state),
        Err(first_err) => {
            if trop.nodes.is_empty() {
                return Err(first_err);
            }
            let mut flipped = trop.clone();
            for n in flipped.nodes.iter_mut() {
                n.resolution = n.resolution.map(|s| -s);
            }
            attempt(&flipped).map_err(|_| first_err)
        }
    }
}

/// Solve the incidence conditions at `c_target` by geometric continuation
/// from a seed.
///
/// A tropical seed starts at c₀ = 16/diameter; a curve seed starts at its
/// own multiplier when the sign matches, and is replaced by a fresh tropical
/// seed otherwise. Negative targets are solved through the reflected
/// contour, whose incidence data at −c is identical. Every accepted step is
/// certified by the winding probe and the tangency pencils; failed steps are
/// retried at geometrically shrunk increments until the relative step drops
/// below 1e-6.
pub fn incidence_newton(
    seed: Seed<'_>,
    contour: &PolygonalContour,
    c_target: f64,
) -> Result<InscribedCurveQ> {
    if c_target == 0.0 || !c_target.is_finite() {
        return Err(Error::Domain(
            "the incidence map degenerates at c = 0; solve at ±ε and extrapolate".into(),
        ));
    }
    if c_target < 0.0 {
        let reflected = contour.reflected();
        let solved = match seed {
            Seed::Curve(q) if q.cvol < 0.0 => {
                let mut flipped = q.clone();
                flipped.cvol = -q.cvol;
                incidence_newton(Seed::Curve(&flipped), &reflected, -c_target)?
            }
            _ => {
                let trop = tropical_q(&reflected)?;
                incidence_newton(Seed::Tropical(&trop), &reflected, -c_target)?
            }
        };
        let mut out = solved;
        out.cvol = c_target;
        return Ok(out);
    }

    let (mut state, mut c_cur) = match seed {
        Seed::Curve(q) if q.cvol > 0.0 => (ParamState::from_curve(q), q.cvol),
        Seed::Curve(_) => {
            let trop = tropical_q(contour)?;
            let c0 = SEED_C_NUMERATOR / contour.diameter();
            (seed_state(&trop, contour, c0)?, c0)
        }
        Seed::Tropical(trop) => {
            let c0 = SEED_C_NUMERATOR / contour.diameter();
            (seed_state(trop, contour, c0)?, c0)
        }
    };

    let mut steps = 0usize;
    while (c_cur - c_target).abs() > 1e-14 * c_target.max(c_cur) {
        steps += 1;
        if steps > 600 {
            return Err(Error::HomotopyStuck {
                c: c_cur,
                msg: "continuation exceeded its step budget".into(),
            });
        }
        let mut c_next = if c_target > c_cur {
            (c_cur / CONTINUATION_FACTOR).min(c_target)
        } else {
            (c_cur * CONTINUATION_FACTOR).max(c_target)
        };
        loop {
            let mut trial = state.clone();
            let result = trial
                .newton_solve(c_next, contour)
                .and_then(|()| trial.winding_probe(c_next, contour, 32, 8, 0x5eed_0003 ^ steps as u64))
                .and_then(|()| trial.tangency_certs(c_next, contour))
                .and_then(|()| trial.refresh_nodes(c_next));
            match result {
                Ok(()) => {
                    state = trial;
                    c_cur = c_next;
                    break;
                }
                Err(e @ Error::TacnodeApproach { .. }) => return Err(e),
                Err(e) => {
                    let halved = (c_cur * c_next).sqrt();
                    if (halved - c_cur).abs() < MIN_RELATIVE_STEP * c_cur {
                        return Err(match e {
                            Error::WindingLost { .. } => e,
                            _ => Error::HomotopyStuck {
                                c: c_cur,
                                msg: format!("cannot step past {c_next:.6e}: {e}"),
                            },
                        });
                    }
                    c_next = halved;
                }
            }
        }
    }

    // final certificates and the expanded coefficient form
    let poly = state.implicitize()?;
    let maxc = poly
        .f64_terms()
        .iter()
        .fold(0.0f64, |m, &(_, _, v)| m.max(v.abs()));
    let d = state.d as i32;
    let total_deg = poly
        .f64_terms()
        .iter()
        .filter(|&&(_, _, v)| v.abs() > 1e-9 * maxc)
        .map(|&(i, j, _)| i + j)
        .max()
        .unwrap_or(0);
    if total_deg != d {
        return Err(Error::NonGeneric(format!(
            "implicit form has total degree {total_deg}, expected {d}"
        )));
    }
    for i in 0..=d {
        let top = poly.f64_terms().iter().find(|&&(ti, tj, _)| ti == i && tj == d - i);
        if top.map(|&(_, _, v)| v.abs()).unwrap_or(0.0) < 1e-10 * maxc {
            return Err(Error::NonGeneric(
                "implicit form is missing a top coefficient; an asymptote degenerated".into(),
            ));
        }
    }
    let expected_nodes = (state.d - 1) * (state.d - 2) / 2;
    if state.node_u.len() != expected_nodes {
        return Err(Error::NonGeneric(format!(
            "tracked {} nodes, expected {expected_nodes}",
            state.node_u.len()
        )));
    }
    Ok(state.to_curve(c_target, poly))
}

/// Convenience: tropical seed plus continuation in one call.
pub fn inscribe(contour: &PolygonalContour, c_target: f64) -> Result<InscribedCurveQ> {
    let trop = tropical_q(contour)?;
    incidence_newton(Seed::Tropical(&trop), contour, c_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn hexagon() -> &'static PolygonalContour {
        static CELL: OnceLock<PolygonalContour> = OnceLock::new();
        CELL.get_or_init(PolygonalContour::hexagon)
    }

    fn heart() -> &'static PolygonalContour {
        static CELL: OnceLock<PolygonalContour> = OnceLock::new();
        CELL.get_or_init(PolygonalContour::heart9)
    }

    fn hex_trop() -> &'static TropicalCurveQ {
        static CELL: OnceLock<TropicalCurveQ> = OnceLock::new();
        CELL.get_or_init(|| tropical_q(hexagon()).unwrap())
    }

    fn heart_trop() -> &'static TropicalCurveQ {
        static CELL: OnceLock<TropicalCurveQ> = OnceLock::new();
        CELL.get_or_init(|| tropical_q(heart()).unwrap())
    }

    struct HeartConstants {
        a: f64,
        s: f64,
        r: f64,
        g: f64,
        m: f64,
    }

    fn heart_constants() -> HeartConstants {
        let s6 = 6f64.sqrt();
        let s2 = 2f64.sqrt();
        let a = (3.0 * s6 + 5.0 * s2) / 8.0;
        let s = -(3.0 * s6 - 5.0 * s2) / 8.0;
        let r = 1.0 / s2;
        let g = 0.75 * s6;
        HeartConstants { a, s, r, g, m: g - r }
    }

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got}, want {want} (tol {tol})"
        );
    }

    fn assert_multiset(got: &mut Vec<f64>, want: &mut Vec<f64>, tol: f64, what: &str) {
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got.len(), want.len(), "{what}: sizes differ");
        for (g, w) in got.iter().zip(want.iter()) {
            assert_close(*g, *w, tol, what);
        }
    }

    #[test]
    fn closure_violation_is_rejected() {
        let r = PolygonalContour::new(vec![2.0, 0.0], vec![0.0, 2.0], vec![1.0, -0.9], 0.0);
        assert!(matches!(r, Err(Error::Infeasible(_))), "{r:?}");
        let r = PolygonalContour::new(vec![2.0, 0.0], vec![0.0], vec![1.0, -1.0], 0.0);
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn hexagon_geometry_is_the_reference_hexagon() {
        let h = hexagon();
        let want = [
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 1.0),
            (2.0, 2.0),
            (1.0, 2.0),
            (0.0, 1.0),
        ];
        for (got, want) in h.corners().iter().zip(want.iter()) {
            assert_close(got.0, want.0, 1e-12, "corner x");
            assert_close(got.1, want.1, 1e-12, "corner y");
        }
        let want_h = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        for (got, want) in h.corner_heights().iter().zip(want_h.iter()) {
            assert_close(*got, *want, 1e-12, "corner height");
        }
        assert!(h.contains(1.0, 1.0));
        assert!(!h.contains(1.9, 0.1));
        assert!(!h.is_perturbed());
    }

    #[test]
    fn corner_extension_matches_dense_boundary_scan() {
        // oracle for the corner reduction: the sup over the whole boundary
        // of h(b) − ρ(b − v) equals the max over corners alone
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for contour in [hexagon(), heart()] {
            let surf_min = pl_surface(contour, Extremum::Min).unwrap();
            let surf_max = pl_surface(contour, Extremum::Max).unwrap();
            let edges = contour.edges();
            let heights = contour.corner_heights();
            let (lo, hi) = contour.bbox();
            let mut tested = 0;
            while tested < 40 {
                let x = rng.gen_range(lo.0..hi.0);
                let y = rng.gen_range(lo.1..hi.1);
                if !contour.contains(x, y) {
                    continue;
                }
                tested += 1;
                let mut dense_min = f64::NEG_INFINITY;
                let mut dense_max = f64::INFINITY;
                for (k, e) in edges.iter().enumerate() {
                    let h0 = heights[k];
                    for s in 0..=600 {
                        let t = s as f64 / 600.0;
                        let bx = e.from.0 + t * (e.to.0 - e.from.0);
                        let by = e.from.1 + t * (e.to.1 - e.from.1);
                        let hb = match e.kind {
                            LineKind::Diagonal => h0 + (bx - e.from.0),
                            _ => h0,
                        };
                        dense_min = dense_min.max(hb - rho((bx - x, by - y)));
                        dense_max = dense_max.min(hb + rho((x - bx, y - by)));
                    }
                }
                assert_close(surf_min.eval(x, y), dense_min, 1e-9, "min extension");
                assert_close(surf_max.eval(x, y), dense_max, 1e-9, "max extension");
            }
        }
    }

    #[test]
    fn hexagon_min_surface_is_a_box_corner() {
        let surf = pl_surface(hexagon(), Extremum::Min).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 200 {
            let x = rng.gen_range(0.0..2.0);
            let y = rng.gen_range(0.0..2.0);
            if !hexagon().contains(x, y) {
                continue;
            }
            tested += 1;
            let want = 0f64.max(x - 1.0).max(y - 1.0);
            assert_close(surf.eval(x, y), want, 1e-12, "box corner height");
        }
        let mut pieces: Vec<((i64, i64), f64)> = surf
            .facets
            .iter()
            .map(|f| (f.gradient, f.offset))
            .collect();
        pieces.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            pieces,
            vec![((0, 0), 0.0), ((0, 1), -1.0), ((1, 0), -1.0)],
            "facet decomposition"
        );
        assert_eq!(surf.creases.len(), 3, "creases: {:?}", surf.creases);
        for crease in &surf.creases {
            assert!(crease.valley, "box corner creases are valleys");
        }
        let mut got: Vec<(LineKind, f64)> =
            surf.creases.iter().map(|c| (c.kind, c.value)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got[0].0, LineKind::Vertical);
        assert_close(got[0].1, 1.0, 1e-9, "vertical crease");
        assert_eq!(got[1].0, LineKind::Horizontal);
        assert_close(got[1].1, 1.0, 1e-9, "horizontal crease");
        assert_eq!(got[2].0, LineKind::Diagonal);
        assert_close(got[2].1, 0.0, 1e-9, "diagonal crease");
        // the three segments radiate from (1,1) to the boundary
        for c in &surf.creases {
            let near = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).abs().max((p.1 - q.1).abs()) < 0.05;
            let (lo_end, hi_end) = match c.kind {
                LineKind::Vertical => ((1.0, 0.0), (1.0, 1.0)),
                LineKind::Horizontal => ((0.0, 1.0), (1.0, 1.0)),
                LineKind::Diagonal => ((1.0, 1.0), (2.0, 2.0)),
            };
            assert!(
                near(c.from, lo_end) && near(c.to, hi_end),
                "crease span {:?}",
                c
            );
        }
    }

    #[test]
    fn hexagon_max_surface_is_a_roof() {
        let surf = pl_surface(hexagon(), Extremum::Max).unwrap();
        let mut pieces: Vec<((i64, i64), f64)> = surf
            .facets
            .iter()
            .map(|f| (f.gradient, f.offset))
            .collect();
        pieces.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // inside the hexagon the maximal extension is min(x, y, 1); the
        // x−1 and y−1 branches only win outside, so three facets show
        assert_eq!(
            pieces,
            vec![((0, 0), 1.0), ((0, 1), 0.0), ((1, 0), 0.0)],
            "roof facets"
        );
        for (p, want) in [
            ((1.0, 1.0), 1.0),
            ((1.5, 0.2), 0.5), // outside: the corner formula, not min(x, y, 1)
            ((0.2, 1.5), 0.5),
            ((0.3, 0.8), 0.3),
            ((0.8, 0.3), 0.3),
        ] {
            assert_close(surf.eval(p.0, p.1), want, 1e-12, "roof height");
        }
        let min_surf = pl_surface(hexagon(), Extremum::Min).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = rng.gen_range(0.0..2.0);
            let y = rng.gen_range(0.0..2.0);
            if hexagon().contains(x, y) {
                assert_close(surf.eval(x, y), x.min(y).min(1.0), 1e-12, "roof formula");
                assert!(surf.eval(x, y) >= min_surf.eval(x, y) - 1e-12);
            }
        }
    }

    #[test]
    fn tropical_offsets_match_hand_derived_hexagon() {
        let trop = hex_trop();
        for (key, want) in [
            ((0, 0), 0.0),
            ((1, 0), -2.0),
            ((2, 0), -2.0),
            ((0, 1), -2.0),
            ((0, 2), -2.0),
            ((1, 1), -3.0),
        ] {
            assert_close(trop.offset(key.0, key.1).unwrap(), want, 1e-12, "offset");
        }
        assert_eq!(trop.chambers.len(), 6);
        assert!(trop.nodes.is_empty());
        let rays: Vec<&TropEdge> = trop.edges.iter().filter(|e| e.to.is_none()).collect();
        let bounded: Vec<&TropEdge> = trop.edges.iter().filter(|e| e.to.is_some()).collect();
        assert_eq!(rays.len(), 6);
        assert_eq!(bounded.len(), 3);
        let mut bvals: Vec<(LineKind, f64)> =
            bounded.iter().map(|e| (e.kind, e.value)).collect();
        bvals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(bvals[0].0, LineKind::Vertical);
        assert_close(bvals[0].1, 1.0, 1e-12, "bounded vertical");
        assert_eq!(bvals[1].0, LineKind::Horizontal);
        assert_close(bvals[1].1, 1.0, 1e-12, "bounded horizontal");
        assert_eq!(bvals[2].0, LineKind::Diagonal);
        assert_close(bvals[2].1, 0.0, 1e-12, "bounded diagonal");
        let mut verts = trop.vertices.clone();
        verts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (2.0, 2.0)];
        assert_eq!(verts.len(), 4);
        for (got, want) in verts.iter().zip(want.iter()) {
            assert_close(got.0, want.0, 1e-9, "vertex x");
            assert_close(got.1, want.1, 1e-9, "vertex y");
        }
    }

    #[test]
    fn heart_curve_has_ten_chambers_and_one_node() {
        let hc = heart_constants();
        let (a, s, r, g, m) = (hc.a, hc.s, hc.r, hc.g, hc.m);
        let n = HEART_NOTCH;
        let trop = heart_trop();
        for (key, want) in [
            ((0, 0), 0.0),
            ((1, 0), -a),
            ((0, 1), -a),
            ((2, 0), -a - s + n),
            ((0, 2), -a - s - n),
            ((3, 0), -a - s + r + n),
            ((0, 3), -a - s + r - n),
            ((2, 1), r - g - a - s - n),
            ((1, 2), r - g - a - s - n),
            ((1, 1), r - g - a - 2.0 * n),
        ] {
            assert_close(
                trop.offset(key.0, key.1).unwrap(),
                want,
                1e-11,
                &format!("offset {key:?}"),
            );
        }
        assert_eq!(trop.chambers.len(), 10);
        assert_eq!(trop.nodes.len(), 1);
        let node = &trop.nodes[0];
        assert_eq!(node.base, (1, 0));
        assert_close(node.position.0, s - n, 1e-9, "node x");
        assert_close(node.position.1, m + 2.0 * n, 1e-9, "node y");
        let rays: Vec<&TropEdge> = trop.edges.iter().filter(|e| e.to.is_none()).collect();
        assert_eq!(rays.len(), 9);
        assert_eq!(trop.edges.len() - rays.len(), 8, "bounded edges");
        assert_eq!(trop.vertices.len(), 8);
        // measured valley creases all lie on edges of the completed curve
        let surf = pl_surface(heart(), Extremum::Min).unwrap();
        let mut seen = 0;
        for crease in surf.creases.iter().filter(|c| c.valley) {
            seen += 1;
            let hit = trop
                .edges
                .iter()
                .any(|e| e.kind == crease.kind && (e.value - crease.value).abs() < 1e-9);
            assert!(hit, "crease {crease:?} not on the completed curve");
        }
        assert!(seen >= 5, "expected several valley creases, saw {seen}");
    }

    #[test]
    fn seed_coefficient_ratios_recover_line_positions() {
        // root locations converge to the side data like exp(-c * gap), so c
        // is sized to the smallest gap of each contour
        for (contour, trop, c) in [
            (hexagon(), hex_trop(), 4.0),
            (heart(), heart_trop(), 12.0),
        ] {
            let d = contour.degree() as i32;
            let q = trop.seed(c);
            let coef = |i: i32, j: i32| {
                q.f64_terms()
                    .iter()
                    .find(|&&(ti, tj, _)| ti == i && tj == j)
                    .map(|&(_, _, v)| v)
                    .unwrap()
            };
            // adjacent coefficient ratios are exactly the offset differences
            for i in 0..d {
                for j in 0..=(d - 1 - i) {
                    let ratio = (coef(i + 1, j) / coef(i, j)).abs().ln() / c;
                    let want = trop.offset(i, j).unwrap() - trop.offset(i + 1, j).unwrap();
                    assert_close(ratio, want, 1e-12, "vertical ratio");
                }
            }
            for j in 0..d {
                for i in 0..=(d - 1 - j) {
                    let ratio = (coef(i, j + 1) / coef(i, j)).abs().ln() / c;
                    let want = trop.offset(i, j).unwrap() - trop.offset(i, j + 1).unwrap();
                    assert_close(ratio, want, 1e-12, "horizontal ratio");
                }
            }
            // axis restrictions break at the side coordinates
            let axis: Vec<f64> = (0..=d).map(|i| coef(i, 0)).collect();
            let roots = rp_unipoly(&axis).roots().unwrap();
            let mut got: Vec<f64> = roots
                .iter()
                .flat_map(|&(z, mult)| std::iter::repeat(-z.re.ln() / c).take(mult))
                .collect();
            let mut want = contour.alpha().to_vec();
            assert_multiset(&mut got, &mut want, 1e-3, "axis roots");
            // as do the asymptotic slopes
            let top: Vec<f64> = (0..=d).map(|i| coef(i, d - i)).collect();
            let troots = rp_unipoly(&top).roots().unwrap();
            let mut got: Vec<f64> = troots
                .iter()
                .flat_map(|&(z, mult)| std::iter::repeat((-z.re).ln() / c).take(mult))
                .collect();
            let mut want = contour.gamma().to_vec();
            assert_multiset(&mut got, &mut want, 1e-3, "slope roots");
        }
    }

    /// Distance from a point to the tropical edge set.
    fn edge_distance(trop: &TropicalCurveQ, p: (f64, f64), reach: f64) -> f64 {
        trop.edges
            .iter()
            .map(|e| {
                let to = e.to.unwrap_or((
                    e.from.0 + reach * e.direction.0 as f64,
                    e.from.1 + reach * e.direction.1 as f64,
                ));
                dist_point_segment(p, e.from, to)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Scaled amoeba section in y over a fixed x (and the transpose).
    fn amoeba_hits(q: &BiPoly, c: f64, fixed: f64, transpose: bool) -> Vec<f64> {
        let mut out = Vec::new();
        let (imax, jmax) = q.max_exponents();
        let deg = if transpose { imax } else { jmax } as usize;
        for kt in 0..24 {
            let th = std::f64::consts::PI * 2.0 * kt as f64 / 24.0 + 0.21;
            let fixval = Complex64::from_polar((-c * fixed).exp(), th);
            let mut coeffs = vec![Complex64::new(0.0, 0.0); deg + 1];
            for &(i, j, v) in q.f64_terms() {
                let (pow_fixed, idx) = if transpose {
                    (j, i as usize)
                } else {
                    (i, j as usize)
                };
                coeffs[idx] += v * fixval.powi(pow_fixed);
            }
            let p = UniPoly::new(coeffs);
            if p.degree() == 0 {
                continue;
            }
            if let Ok(roots) = p.roots() {
                for (z, _) in roots {
                    if z.norm() > 1e-280 {
                        out.push(-z.norm().ln() / c);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn seed_amoeba_tracks_the_corner_locus() {
        let cases: Vec<(&PolygonalContour, &TropicalCurveQ, Vec<f64>)> = vec![
            (hexagon(), hex_trop(), vec![4.0, 8.0, 16.0]),
            (heart(), heart_trop(), vec![8.0]),
        ];
        for (contour, trop, cs) in cases {
            let (lo, hi) = contour.bbox();
            let pad = 0.25;
            let window = ((lo.0 - pad, lo.1 - pad), (hi.0 + pad, hi.1 + pad));
            let reach = contour.diameter() * 4.0;
            for c in cs {
                let tol = 5.0 / c;
                let q = trop.seed(c);
                // amoeba points lie near the curve
                for kx in 0..=40 {
                    let x = window.0 .0 + (window.1 .0 - window.0 .0) * kx as f64 / 40.0;
                    for y in amoeba_hits(&q, c, x, false) {
                        if y < window.0 .1 || y > window.1 .1 {
                            continue;
                        }
                        let dist = edge_distance(trop, (x, y), reach);
                        assert!(
                            dist <= tol,
                            "amoeba point ({x:.3}, {y:.3}) is {dist:.3} from the curve at c={c}"
                        );
                    }
                }
                // curve points lie near the amoeba
                for e in &trop.edges {
                    let to = e.to.unwrap_or((
                        e.from.0 + reach * e.direction.0 as f64,
                        e.from.1 + reach * e.direction.1 as f64,
                    ));
                    for k in 0..=12 {
                        let t = k as f64 / 12.0;
                        let x = e.from.0 + t * (to.0 - e.from.0);
                        let y = e.from.1 + t * (to.1 - e.from.1);
                        if x < window.0 .0
                            || x > window.1 .0
                            || y < window.0 .1
                            || y > window.1 .1
                        {
                            continue;
                        }
                        let dy = amoeba_hits(&q, c, x, false)
                            .iter()
                            .fold(f64::INFINITY, |m, &hit| m.min((hit - y).abs()));
                        let dx = amoeba_hits(&q, c, y, true)
                            .iter()
                            .fold(f64::INFINITY, |m, &hit| m.min((hit - x).abs()));
                        let dist = dy.min(dx);
                        assert!(
                            dist <= tol,
                            "curve point ({x:.3}, {y:.3}) is {dist:.3} from the amoeba at c={c}"
                        );
                    }
                }
            }
        }
    }

    /// The unique conic through the six incidence constraints, as a direct
    /// nullspace oracle.
    fn conic_oracle(contour: &PolygonalContour, c: f64) -> Vec<(i32, i32, f64)> {
        // columns: 1, ζ, ω, ζ², ω², ζω
        let mut rows: Vec<[f64; 6]> = Vec::new();
        for &al in contour.alpha() {
            let z = (-c * al).exp();
            rows.push([1.0, z, 0.0, z * z, 0.0, 0.0]);
        }
        for &be in contour.beta() {
            let w = (-c * be).exp();
            rows.push([1.0, 0.0, w, 0.0, w * w, 0.0]);
        }
        for &ga in contour.gamma() {
            let mslope = -(c * ga).exp();
            rows.push([0.0, 0.0, 0.0, 1.0, mslope * mslope, mslope]);
        }
        let m = DMatrix::from_fn(rows.len(), 6, |r, cidx| rows[r][cidx]);
        let svd = m.svd(false, true);
        let vt = svd.v_t.unwrap();
        let null = vt.row(5);
        let monos = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1)];
        monos
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| (i, j, null[k]))
            .collect()
    }

    fn normalized(coeffs: &[(i32, i32, f64)]) -> BTreeMap<(i32, i32), f64> {
        let maxc = coeffs.iter().fold(0.0f64, |m, &(_, _, v)| m.max(v.abs()));
        let q00 = coeffs
            .iter()
            .find(|&&(i, j, _)| (i, j) == (0, 0))
            .map(|&(_, _, v)| v)
            .unwrap_or(1.0);
        let flip = q00.signum();
        coeffs
            .iter()
            .map(|&(i, j, v)| ((i, j), v / (flip * maxc)))
            .collect()
    }

    fn exact_hexagon_conic(c: f64) -> Vec<(i32, i32, f64)> {
        let e2 = (-2.0 * c).exp();
        vec![
            (0, 0, e2),
            (1, 0, -(1.0 + e2)),
            (0, 1, -(1.0 + e2)),
            (2, 0, 1.0),
            (0, 2, 1.0),
            (1, 1, 2.0 * c.cosh()),
        ]
    }

    #[test]
    fn inscribed_conic_matches_the_tangency_oracle() {
        let c = 1.0;
        let q = inscribe(hexagon(), c).unwrap();
        assert_eq!(q.degree(), 2);
        assert!(q.nodes.is_empty());
        assert!(
            q.incidence_residual(hexagon()) < 1e-10,
            "residual {}",
            q.incidence_residual(hexagon())
        );
        let got = normalized(q.poly.f64_terms());
        let want_exact = normalized(&exact_hexagon_conic(c));
        let want_oracle = normalized(&conic_oracle(hexagon(), c));
        for (key, v) in &want_exact {
            assert_close(got[key], *v, 1e-8, &format!("coefficient {key:?} vs exact"));
            assert_close(
                want_oracle[key],
                *v,
                1e-10,
                &format!("oracle self-check {key:?}"),
            );
        }
        q.winding_certificate(hexagon(), 60, 60, 0xc0ffee).unwrap();
        q.tangency_certificate(hexagon()).unwrap();
        // gauge pins
        assert_close(q.params_a()[0], 0.0, 1e-15, "a1 gauge");
        assert_close(q.params_b()[0], 1.0, 1e-15, "b1 gauge");
        assert!(q.params_c()[0].is_none(), "c1 gauge");
    }

    #[test]
    fn inscription_solves_on_both_sides_of_zero() {
        let c = -1.0;
        let q = inscribe(hexagon(), c).unwrap();
        assert_close(q.cvol(), c, 0.0, "cvol");
        assert!(
            q.incidence_residual(hexagon()) < 1e-9,
            "negative-c residual {}",
            q.incidence_residual(hexagon())
        );
        let got = normalized(q.poly.f64_terms());
        let want = normalized(&exact_hexagon_conic(c));
        for (key, v) in &want {
            assert_close(got[key], *v, 1e-8, &format!("coefficient {key:?} at c<0"));
        }
        // the heart solves on both sides too, tangent to the same nine lines
        let plus = inscribe(heart(), 0.8).unwrap();
        let minus = inscribe(heart(), -0.8).unwrap();
        for q in [&plus, &minus] {
            assert!(q.incidence_residual(heart()) < 1e-9);
            q.tangency_certificate(heart()).unwrap();
        }
        // a solved curve seeds a nearby multiplier directly
        let moved = incidence_newton(Seed::Curve(&plus), heart(), 0.5).unwrap();
        assert!(moved.incidence_residual(heart()) < 1e-9);
        assert_eq!(moved.nodes.len(), 1);
    }

    #[test]
    fn heart_inscription_carries_one_node_and_winds() {
        let q = inscribe(heart(), 1.0).unwrap();
        assert_eq!(q.degree(), 3);
        assert_eq!(q.nodes.len(), 1);
        let node = &q.nodes[0];
        assert!(node.zeta > 0.0 && node.omega > 0.0, "node: {node:?}");
        assert!(
            q.incidence_residual(heart()) < 1e-10,
            "residual {}",
            q.incidence_residual(heart())
        );
        q.winding_certificate(heart(), 60, 60, 0xbeef).unwrap();
        q.tangency_certificate(heart()).unwrap();
        // the expanded form nearly vanishes with its gradient at the node
        let (val, dz, dw) = q
            .poly
            .eval_and_derivs(
                Complex64::new(node.zeta, 0.0),
                Complex64::new(node.omega, 0.0),
            )
            .unwrap();
        let gscale = q
            .poly
            .f64_terms()
            .iter()
            .fold(0.0f64, |m, &(_, _, v)| m.max(v.abs()));
        assert!(val.norm() < 1e-7 * gscale, "node value {}", val.norm());
        assert!(
            dz.norm().hypot(dw.norm()) < 1e-4 * gscale,
            "node gradient {} {}",
            dz.norm(),
            dw.norm()
        );
        // parameters interlace as (a, b, c) repeating around the circle
        let mut ring: Vec<(f64, u8)> = Vec::new();
        for &u in q.params_a() {
            ring.push((u, 0));
        }
        for &u in q.params_b() {
            ring.push((u, 1));
        }
        for v in q.params_c().into_iter().flatten() {
            ring.push((v, 2));
        }
        let ckey = |u: f64| {
            let t = u.atan();
            if t >= -1e-18 {
                t
            } else {
                t + std::f64::consts::PI
            }
        };
        ring.sort_by(|x, y| ckey(x.0).partial_cmp(&ckey(y.0)).unwrap());
        // with c₁ = ∞ omitted the visible pattern starts at a₁ = 0
        for (k, &(_, fam)) in ring.iter().enumerate() {
            let want = match k % 3 {
                0 => 0,
                1 => 1,
                _ => 2,
            };
            if k == ring.len() - 1 {
                // the final c slot is the omitted pole at infinity
                break;
            }
            assert_eq!(fam, want, "parameter ring at position {k}: {ring:?}");
        }
    }

    #[test]
    fn frozen_limit_of_the_heart_is_a_cardioid() {
        let eps = 5e-3;
        let plus = inscribe(heart(), eps).unwrap();
        let minus = inscribe(heart(), -eps).unwrap();
        let samples_p = plus.lozenge_boundary_samples(4000);
        let samples_m = minus.lozenge_boundary_samples(4000);
        assert!(samples_p.len() > 200, "physical arc too short: {}", samples_p.len());
        assert!(samples_m.len() > 200);
        // radial average around a common center cancels the O(ε) drift
        let center = {
            let n = samples_p.len() as f64;
            let (sx, sy) = samples_p
                .iter()
                .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
            (sx / n, sy / n)
        };
        let radial = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
            let mut out: Vec<(f64, f64)> = pts
                .iter()
                .map(|p| {
                    let (dx, dy) = (p.0 - center.0, p.1 - center.1);
                    (dy.atan2(dx), (dx * dx + dy * dy).sqrt())
                })
                .collect();
            out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            out
        };
        let rp = radial(&samples_p);
        let rm = radial(&samples_m);
        let interp = |tab: &[(f64, f64)], th: f64| -> f64 {
            let n = tab.len();
            let idx = tab.partition_point(|&(t, _)| t < th);
            let (t1, r1) = tab[(idx + n - 1) % n];
            let (t2, r2) = tab[idx % n];
            let mut span = t2 - t1;
            let mut offs = th - t1;
            if span <= 0.0 {
                span += std::f64::consts::TAU;
            }
            if offs < 0.0 {
                offs += std::f64::consts::TAU;
            }
            r1 + (r2 - r1) * (offs / span).clamp(0.0, 1.0)
        };
        // coverage: no angular gap wider than 0.2 rad in either cloud
        for tab in [&rp, &rm] {
            let mut worst = 0.0f64;
            for k in 0..tab.len() {
                let t1 = tab[k].0;
                let t2 = if k + 1 == tab.len() {
                    tab[0].0 + std::f64::consts::TAU
                } else {
                    tab[k + 1].0
                };
                worst = worst.max(t2 - t1);
            }
            assert!(worst < 0.2, "angular gap {worst}");
        }
        let rot = std::f64::consts::FRAC_PI_4;
        let mut checked = 0;
        for k in 0..720 {
            let th = -std::f64::consts::PI + std::f64::consts::TAU * k as f64 / 720.0;
            let r0 = (interp(&rp, th) + interp(&rm, th)) / 2.0;
            let p = (center.0 + r0 * th.cos(), center.1 + r0 * th.sin());
            // undo the 45° rotation; the limit is r = 1 + cos θ there
            let (xt, yt) = (
                p.0 * rot.cos() + p.1 * rot.sin(),
                -p.0 * rot.sin() + p.1 * rot.cos(),
            );
            if (xt * xt + yt * yt).sqrt() < 0.05 {
                continue; // cusp neighborhood
            }
            checked += 1;
            let rr = xt * xt + yt * yt;
            let f = (rr - xt) * (rr - xt) - rr;
            let gx = 2.0 * (rr - xt) * (2.0 * xt - 1.0) - 2.0 * xt;
            let gy = 2.0 * (rr - xt) * (2.0 * yt) - 2.0 * yt;
            let grad = gx.hypot(gy).max(1e-6);
            assert!(
                (f / grad).abs() <= 1e-4,
                "cardioid residual {:.2e} at angle {th:.3}",
                (f / grad).abs()
            );
        }
        assert!(checked > 600, "too few residual checks: {checked}");
    }

    #[test]
    fn serialized_curve_matches_the_documented_shape() {
        let q = inscribe(hexagon(), 1.0).unwrap();
        let v = q.to_json();
        assert!(v["A"].is_f64());
        assert!(v["B"].is_f64());
        assert_close(v["C"].as_f64().unwrap(), 1.0, 0.0, "C");
        assert_eq!(v["a"].as_array().unwrap().len(), 2);
        assert_eq!(v["b"].as_array().unwrap().len(), 2);
        let c_list = v["c"].as_array().unwrap();
        assert_eq!(c_list.len(), 2);
        assert!(c_list[0].is_null());
        assert!(c_list[1].is_f64());
        assert_close(v["cvol"].as_f64().unwrap(), 1.0, 0.0, "cvol");
        assert_close(v["a"][0].as_f64().unwrap(), 0.0, 0.0, "a1");
        assert_close(v["b"][0].as_f64().unwrap(), 1.0, 0.0, "b1");
        assert_eq!(v["poly"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn zero_volume_target_is_rejected() {
        let trop = hex_trop();
        let r = incidence_newton(Seed::Tropical(trop), hexagon(), 0.0);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn reflection_mirrors_geometry_and_offsets() {
        for contour in [hexagon(), heart()] {
            let r = contour.reflected();
            for ((p, q), (hp, hq)) in contour
                .corners()
                .iter()
                .zip(r.corners())
                .zip(contour.corner_heights().iter().zip(r.corner_heights()))
            {
                assert_close(q.0, -p.0, 1e-12, "reflected corner x");
                assert_close(q.1, -p.1, 1e-12, "reflected corner y");
                assert_close(*hq, -*hp, 1e-12, "reflected height");
            }
            let back = r.reflected();
            for (p, q) in contour.corners().iter().zip(back.corners()) {
                assert_close(q.0, p.0, 1e-12, "double reflection x");
                assert_close(q.1, p.1, 1e-12, "double reflection y");
            }
        }
        let rt = tropical_q(&hexagon().reflected()).unwrap();
        let mut got: Vec<f64> = rt
            .edges
            .iter()
            .filter(|e| e.to.is_none() && e.kind == LineKind::Vertical)
            .map(|e| e.value)
            .collect();
        let mut want = vec![-2.0, 0.0];
        assert_multiset(&mut got, &mut want, 1e-12, "reflected rays");
    }

    #[test]
    fn concurrent_side_lines_are_perturbed_or_rejected() {
        // the exact heart tangent lines with no notch: three sides pass
        // through one point, collapsing two corners
        let hc = heart_constants();
        let (a, s, r, g) = (hc.a, hc.s, hc.r, hc.g);
        let res = PolygonalContour::new(
            vec![a, -r, s],
            vec![-r, a, s],
            vec![g, -g, 0.0],
            0.0,
        );
        match res {
            Ok(c) => assert!(c.is_perturbed(), "degenerate contour accepted unjittered"),
            Err(Error::NonGeneric(_)) | Err(Error::DegenerateInput(_)) => {}
            Err(e) => panic!("unexpected rejection: {e}"),
        }
    }

    #[test]
    fn contour_jitter_keeps_the_seed_solvable() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
            cases: 12,
            ..Default::default()
        });
        let strategy = proptest::collection::vec(-0.03f64..0.03, 6);
        runner
            .run(&strategy, |jit| {
                let alpha = vec![2.0 + jit[0], 0.0 + jit[1]];
                let beta = vec![0.0 + jit[2], 2.0 + jit[3]];
                let mut gamma = vec![1.0 + jit[4], -1.0 + jit[5]];
                let resid: f64 = (0..2).map(|i| beta[i] + gamma[i] - alpha[i]).sum();
                gamma[1] -= resid;
                let contour = PolygonalContour::new(alpha, beta, gamma, 0.0).unwrap();
                let trop = tropical_q(&contour).unwrap();
                prop_assert_eq!(trop.chambers.len(), 6);
                let c0 = SEED_C_NUMERATOR / contour.diameter();
                let q = incidence_newton(Seed::Tropical(&trop), &contour, c0).unwrap();
                prop_assert!(q.incidence_residual(&contour) < 1e-10);
                q.winding_certificate(&contour, 16, 4, 0xabcd).unwrap();
                Ok(())
            })
            .unwrap();
    }
}
