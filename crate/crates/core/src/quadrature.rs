//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used as an independent check on the closed forms behind the integral
//! primitives, never on the evaluation path itself.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// `∫_a^b f` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
        };
    }
    let (v, e) = gk15(&f, a, b);
    let mut stack = vec![(a, b, v, e, tol, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    while let Some((a, b, v, e, tol, depth)) = stack.pop() {
        if e <= tol || depth >= 60 || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            if e > tol {
                converged = false;
            }
            value += v;
            error += e;
            continue;
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        stack.push((a, m, v1, e1, tol / 2.0, depth + 1));
        stack.push((m, b, v2, e2, tol / 2.0, depth + 1));
    }
    Quadrature {
        value,
        error_estimate: error,
        converged,
    }
}

/// `∫_0^x 2u sin(1/u) du`, panelled between consecutive zeros of `sin(1/u)`.
///
/// The interval `[0, ε]` with `ε² ≤ tol/2` is dropped since the integrand is bounded by `2u`.
pub fn integral_g1(x: f64, tol: f64) -> f64 {
    let integrand = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            2.0 * u * (1.0 / u).sin()
        }
    };
    let sign = x.signum();
    let y = x.abs();
    let cut = (tol / 2.0).sqrt();
    if y <= cut {
        return 0.0;
    }
    oscillatory_panels(integrand, cut, y, tol / 2.0) * sign
}

/// `∫_0^x u⁻² e^{-1/|u|} (sin(1/u) - 1) du` by panels; `[0, ε]` with `2e^{-1/ε} ≤ tol/2` is dropped.
pub fn integral_g2(x: f64, tol: f64) -> f64 {
    let integrand = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let a = 1.0 / u.abs();
        (2.0 * a.ln() - a).exp() * ((1.0 / u).sin() - 1.0)
    };
    let cut = 1.0 / (4.0 / tol).ln();
    let y = x.abs();
    if y <= cut {
        return 0.0;
    }
    if x > 0.0 {
        oscillatory_panels(integrand, cut, y, tol / 2.0)
    } else {
        -oscillatory_panels(|w| integrand(-w), cut, y, tol / 2.0)
    }
}

/// Integrates over `[lo, hi] ⊂ (0, ∞)` splitting at the points `1/(kπ)`.
fn oscillatory_panels<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    use std::f64::consts::PI;
    let k_hi = (1.0 / (hi * PI)).ceil().max(1.0) as u64;
    let k_lo = (1.0 / (lo * PI)).floor() as u64;
    let mut cuts = vec![lo];
    for k in (k_hi..=k_lo).rev() {
        let c = 1.0 / (k as f64 * PI);
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    let per = tol / cuts.len() as f64;
    cuts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], per).value)
        .sum()
}
