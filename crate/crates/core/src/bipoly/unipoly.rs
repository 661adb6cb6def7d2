//! Dense univariate complex polynomials with simultaneous root finding.

use crate::error::{Error, Result};
use num::complex::Complex64;
use num::Zero;

/// A root is accepted when |p(r)| is below this factor times the evaluation
/// magnitude bound Σ|a_k||r|^k, i.e. zero to within float evaluation error.
const ROOT_RESIDUAL_TOL: f64 = 1e-11;
/// Roots closer than this (relative to 1 + |root|) merge into one root with
/// multiplicity; double roots at a discriminant must coalesce reliably.
const CLUSTER_TOL: f64 = 1e-7;
const MAX_ITER: usize = 500;

/// Univariate polynomial with complex coefficients, ascending order.
#[derive(Clone, Debug)]
pub struct UniPoly {
    coeffs: Vec<Complex64>,
}

impl UniPoly {
    /// Build from ascending coefficients; exactly-zero leading coefficients
    /// are trimmed so the stored degree is the true degree.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().is_zero() {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::zero());
        }
        UniPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        let mut acc = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    pub fn eval_with_deriv(&self, u: Complex64) -> (Complex64, Complex64) {
        let mut acc = Complex64::zero();
        let mut der = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            der = der * u + acc;
            acc = acc * u + c;
        }
        (acc, der)
    }

    /// Σ |a_k| r^k, the natural magnitude scale of an evaluation at |u| = r.
    fn eval_bound(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * r + c.norm();
        }
        acc
    }

    /// All roots with multiplicities, by Aberth–Ehrlich simultaneous
    /// iteration from perturbed-circle starting points. Nearby
    /// approximations (within [`CLUSTER_TOL`]) merge into a single root with
    /// multiplicity. Fails with the best iterate attached if any residual
    /// remains above [`ROOT_RESIDUAL_TOL`] after [`MAX_ITER`] sweeps.
    pub fn roots(&self) -> Result<Vec<(Complex64, usize)>> {
        if self.degree() == 0 {
            return Err(Error::DegenerateInput(
                "root finding needs degree >= 1".into(),
            ));
        }
        // exact zero roots split off first
        let zero_mult = self
            .coeffs
            .iter()
            .take_while(|c| c.is_zero())
            .count()
            .min(self.degree());
        let inner = &self.coeffs[zero_mult..];
        let mut out: Vec<(Complex64, usize)> = Vec::new();
        if zero_mult > 0 {
            out.push((Complex64::zero(), zero_mult));
        }
        let n = inner.len() - 1;
        if n == 0 {
            return Ok(out);
        }

        let p = UniPoly {
            coeffs: inner.to_vec(),
        };
        let mut zs = initial_circle(inner);
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let mut max_step = 0.0f64;
            for i in 0..n {
                let (val, der) = p.eval_with_deriv(zs[i]);
                if val.is_zero() {
                    continue;
                }
                let newton = if der.is_zero() {
                    // at a critical point: fall back to a small shove
                    Complex64::new(1e-8, 1e-8)
                } else {
                    val / der
                };
                let mut s = Complex64::zero();
                for j in 0..n {
                    if j != i {
                        let d = zs[i] - zs[j];
                        if d.norm_sqr() > 0.0 {
                            s += d.inv();
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - newton * s;
                let step = if denom.is_zero() { newton } else { newton / denom };
                zs[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + zs[i].norm()));
            }
            if max_step < 1e-14 {
                converged = true;
                break;
            }
        }

        // residual acceptance regardless of how the sweep loop exited: slow
        // linear convergence at multiple roots still ends at tiny residuals
        let _ = converged;
        let mut worst = 0.0f64;
        for &z in &zs {
            let scale = self.eval_bound(z.norm()).max(f64::MIN_POSITIVE);
            let rel = p.eval(z).norm() / scale;
            worst = worst.max(rel);
        }
        if worst > ROOT_RESIDUAL_TOL {
            return Err(Error::Convergence {
                context: "univariate root finding".into(),
                iterations: MAX_ITER,
                residual: worst,
                best: zs,
            });
        }

        out.extend(cluster(&zs));
        out.sort_by(|a, b| {
            (a.0.re, a.0.im)
                .partial_cmp(&(b.0.re, b.0.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(out)
    }
}

/// Perturbed-circle starting points: radius from the geometric mean of the
/// extreme coefficients, angles offset so no starting point is real.
fn initial_circle(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].norm();
    let tail = coeffs[0].norm().max(f64::MIN_POSITIVE);
    let r = (tail / lead).powf(1.0 / n as f64).clamp(1e-6, 1e6);
    (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64
                + 0.4
                + 0.01 * k as f64;
            let rk = r * (1.0 + 0.05 * ((k % 3) as f64 - 1.0));
            Complex64::from_polar(rk, theta)
        })
        .collect()
}

/// Greedy transitive clustering; each cluster becomes (mean, count).
fn cluster(zs: &[Complex64]) -> Vec<(Complex64, usize)> {
    let n = zs.len();
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        let mut cursor = 0;
        while cursor < members.len() {
            let a = zs[members[cursor]];
            for (j, done) in assigned.iter_mut().enumerate() {
                if !*done && (zs[j] - a).norm() < CLUSTER_TOL * (1.0 + a.norm()) {
                    *done = true;
                    members.push(j);
                }
            }
            cursor += 1;
        }
        let sum: Complex64 = members.iter().map(|&j| zs[j]).sum();
        out.push((sum / members.len() as f64, members.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(roots: &[Complex64]) -> UniPoly {
        let mut coeffs = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::zero(); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        UniPoly::new(coeffs)
    }

    fn assert_root_set(got: &[(Complex64, usize)], want: &[(Complex64, usize)], tol: f64) {
        assert_eq!(
            got.iter().map(|r| r.1).sum::<usize>(),
            want.iter().map(|r| r.1).sum::<usize>()
        );
        for &(r, m) in want {
            let hit = got
                .iter()
                .find(|(g, _)| (g - r).norm() < tol)
                .unwrap_or_else(|| panic!("missing root {r}"));
            assert_eq!(hit.1, m, "multiplicity at {r}");
        }
    }

    #[test]
    fn quadratic_pure_imaginary() {
        let p = UniPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = p.roots().unwrap();
        assert_root_set(&roots, &[(c(0.0, 1.0), 1), (c(0.0, -1.0), 1)], 1e-12);
    }

    #[test]
    fn cube_roots_of_unity() {
        let p = UniPoly::new(vec![c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = p.roots().unwrap();
        let k = (2.0 * std::f64::consts::PI / 3.0).sin_cos();
        assert_root_set(
            &roots,
            &[
                (c(1.0, 0.0), 1),
                (c(k.1, k.0), 1),
                (c(k.1, -k.0), 1),
            ],
            1e-12,
        );
    }

    #[test]
    fn constructed_degree_eight_recovered() {
        let roots = [
            c(2.0, 0.0),
            c(-1.0, 0.0),
            c(0.5, 0.0),
            c(0.0, 1.0),
            c(0.0, -1.0),
            c(1.0, 1.0),
            c(1.0, -1.0),
            c(-3.0, 0.0),
        ];
        let p = from_roots(&roots);
        let got = p.roots().unwrap();
        let want: Vec<_> = roots.iter().map(|&r| (r, 1)).collect();
        assert_root_set(&got, &want, 1e-9);
    }

    #[test]
    fn double_root_clusters_into_multiplicity() {
        // (u−1)²(u+2) = u³ − 3u + 2
        let p = UniPoly::new(vec![c(2.0, 0.0), c(-3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = p.roots().unwrap();
        assert_root_set(&roots, &[(c(1.0, 0.0), 2), (c(-2.0, 0.0), 1)], 1e-5);
    }

    #[test]
    fn exact_zero_roots_split_off() {
        // u²(u+1)
        let p = UniPoly::new(vec![
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        ]);
        let roots = p.roots().unwrap();
        assert_root_set(&roots, &[(c(0.0, 0.0), 2), (c(-1.0, 0.0), 1)], 1e-12);
    }

    #[test]
    fn constant_rejected() {
        let p = UniPoly::new(vec![c(7.0, 0.0)]);
        assert!(matches!(p.roots(), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn scaled_residuals_accept_large_leading_coefficient() {
        // 1e8·(u−1)(u−2): absolute residuals are large, relative ones tiny
        let mut p = from_roots(&[c(1.0, 0.0), c(2.0, 0.0)]);
        for a in &mut p.coeffs {
            *a *= 1e8;
        }
        let roots = p.roots().unwrap();
        assert_root_set(&roots, &[(c(1.0, 0.0), 1), (c(2.0, 0.0), 1)], 1e-10);
    }
}
