//! Closed-form building blocks for the two non-analytic counterexample families.
//!
//! Each function is defined on all of ℝ with value and derivative 0 at the origin.
//! None of them is analytic at 0.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Named non-analytic primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Special {
    /// `x² sin(1/x)`, 0 at 0. Differentiable, not C¹.
    SinOfReciprocal,
    /// `exp(-1/|x|) sin(1/x)`, 0 at 0. C^∞, flat at 0.
    CauchyEnvelope,
    /// `∫₀ˣ 2u sin(1/u) du`.
    IntegralG1,
    /// `∫₀ˣ u⁻² exp(-1/|u|) (sin(1/u) - 1) du`.
    IntegralG2,
}

impl Special {
    pub const ALL: [Special; 4] = [
        Special::SinOfReciprocal,
        Special::CauchyEnvelope,
        Special::IntegralG1,
        Special::IntegralG2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Special::SinOfReciprocal => "sin_of_reciprocal",
            Special::CauchyEnvelope => "cauchy_envelope",
            Special::IntegralG1 => "integral_g1",
            Special::IntegralG2 => "integral_g2",
        }
    }

    pub fn from_name(name: &str) -> Option<Special> {
        Special::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn value(self, x: f64) -> f64 {
        let Some(a) = reciprocal(x) else { return 0.0 };
        match self {
            Special::SinOfReciprocal => x * x * a.sin(),
            Special::CauchyEnvelope => (-a.abs()).exp() * a.sin(),
            Special::IntegralG1 => {
                // g1 is odd; for x > 0 it equals x² sin(1/x) + x cos(1/x) - ∫_{1/x}^∞ sin(v)/v dv.
                let y = x.abs();
                let b = 1.0 / y;
                let v = y * y * b.sin() + y * b.cos() - sine_integral_tail(b);
                v * x.signum()
            }
            Special::IntegralG2 => {
                // Substituting v = 1/|u| turns the integral into ∫_a^∞ e^{-v}(sin v ∓ 1) dv.
                let b = a.abs();
                let tail = (-b).exp();
                let trig = 0.5 * (b.sin() + b.cos());
                if x > 0.0 {
                    tail * (trig - 1.0)
                } else {
                    tail * (trig + 1.0)
                }
            }
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        let Some(a) = reciprocal(x) else { return 0.0 };
        match self {
            Special::SinOfReciprocal => 2.0 * x * a.sin() - a.cos(),
            Special::CauchyEnvelope => {
                let w = damped_square(a.abs());
                w * (a.sin() * x.signum() - a.cos())
            }
            Special::IntegralG1 => 2.0 * x * a.sin(),
            Special::IntegralG2 => damped_square(a.abs()) * (a.sin() - 1.0),
        }
    }
}

/// `1/x`, or `None` when `x` is zero or so small that the reciprocal overflows.
fn reciprocal(x: f64) -> Option<f64> {
    if x == 0.0 {
        return None;
    }
    let a = 1.0 / x;
    a.is_finite().then_some(a)
}

/// `a² e^{-a}` for `a > 0` without overflowing the square.
fn damped_square(a: f64) -> f64 {
    (2.0 * a.ln() - a).exp()
}

/// `∫_a^∞ sin(v)/v dv = π/2 - Si(a)` for `a > 0`.
///
/// Power series below 2, complex continued fraction for `E₁(ia)` above, so the
/// tail never loses digits to the cancellation in `π/2 - Si(a)`.
pub fn sine_integral_tail(a: f64) -> f64 {
    assert!(a > 0.0, "sine_integral_tail needs a > 0");
    if a <= 2.0 {
        return FRAC_PI_2 - sine_integral_series(a);
    }
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, a);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..=1000u32 {
        let k = f64::from(i - 1);
        let an = -k * k;
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * an + b);
        c = b + Complex64::new(an, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    h *= Complex64::new(a.cos(), -a.sin());
    -h.im
}

fn sine_integral_series(a: f64) -> f64 {
    let a2 = a * a;
    let mut term = a;
    let mut sum = a;
    let mut k = 0u32;
    loop {
        let n1 = f64::from(2 * k + 2);
        let n2 = f64::from(2 * k + 3);
        term *= -a2 / (n1 * n2);
        let add = term / n2;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            return sum;
        }
        k += 1;
    }
}
