//! Gauss–Legendre quadrature with adaptive dyadic refinement.

/// 16-point Gauss–Legendre abscissas on [-1, 1] (positive half).
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003_0,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_8,
    0.062_253_523_938_647_9,
    0.027_152_459_411_754_1,
];

/// Nodes and weights of 16-point Gauss–Legendre on [a, b].
pub(crate) fn gl16_nodes(a: f64, b: f64) -> [(f64, f64); 16] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 16];
    for k in 0..8 {
        out[2 * k] = (mid - half * GL16_X[k], half * GL16_W[k]);
        out[2 * k + 1] = (mid + half * GL16_X[k], half * GL16_W[k]);
    }
    out
}

pub(crate) fn gl16<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    gl16_nodes(a, b).iter().map(|&(x, w)| w * f(x)).sum()
}

/// Adaptive dyadic 1-D integration: a panel is accepted when halving it
/// changes the estimate by less than its share of the tolerance. Returns
/// (value, error estimate, panels used).
pub(crate) fn adaptive_1d<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> (f64, f64, usize) {
    fn go<F: FnMut(f64) -> f64>(
        f: &mut F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        err: &mut f64,
        panels: &mut usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl16(f, a, m);
        let right = gl16(f, m, b);
        let diff = (left + right - whole).abs();
        *panels += 2;
        if diff <= tol || depth == 0 {
            *err += diff;
            return left + right;
        }
        go(f, a, m, left, 0.5 * tol, depth - 1, err, panels)
            + go(f, m, b, right, 0.5 * tol, depth - 1, err, panels)
    }
    let whole = gl16(f, a, b);
    let mut err = 0.0;
    let mut panels = 1;
    let v = go(f, a, b, whole, tol, max_depth, &mut err, &mut panels);
    (v, err, panels)
}
