//! Small numerical kernels shared by the solver modules: deterministic
//! summation, adaptive Gauss-Kronrod quadrature and cubic Lagrange weights.

/// Pairwise (fixed-tree) summation. The split points depend only on the
/// length, so results are bit-reproducible regardless of threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..len`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 32 {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, len, &f)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS_K[7] * fc;
    let mut gauss = GK_WEIGHTS_G[3] * fc;
    for (j, &x) in GK_NODES.iter().enumerate().take(7) {
        let s = f(c - h * x) + f(c + h * x);
        kronrod += GK_WEIGHTS_K[j] * s;
        if j % 2 == 1 {
            gauss += GK_WEIGHTS_G[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Subdivides until the embedded error estimate of every panel is below its
/// share of `tol` (absolute) or the recursion depth runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (value, err) = whole;
        if err <= tol || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth - 1) + rec(f, m, b, 0.5 * tol, right, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, 40)
}

/// Cubic Lagrange weights for the stencil `{-1, 0, 1, 2}` evaluated at
/// fractional offset `s` in `[0, 1)`.
#[inline]
pub fn cubic_weights(s: f64) -> [f64; 4] {
    let sm1 = s - 1.0;
    let sm2 = s - 2.0;
    let sp1 = s + 1.0;
    [
        -s * sm1 * sm2 / 6.0,
        sp1 * sm1 * sm2 / 2.0,
        -sp1 * s * sm2 / 2.0,
        sp1 * s * sm1 / 6.0,
    ]
}

/// Splits a position measured in cell units into the base index of the
/// cubic stencil (`floor - 1`) and the cubic weights.
#[inline]
pub fn cubic_stencil(position: f64) -> (i64, [f64; 4]) {
    let floor = position.floor();
    let s = position - floor;
    (floor as i64 - 1, cubic_weights(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum_by(1000, |i| i as f64), 499_500.0);
    }

    #[test]
    fn gauss_kronrod_polynomial_and_smooth() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn cubic_weights_reproduce_cubics() {
        for &s in &[0.0, 0.1, 0.5, 0.93] {
            let w = cubic_weights(s);
            let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.25 * x * x * x;
            let v: f64 = (0..4).map(|k| w[k] * p(k as f64 - 1.0)).sum();
            assert!((v - p(s)).abs() < 1e-14);
        }
        assert_eq!(cubic_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }
}
