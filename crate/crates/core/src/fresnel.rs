//! Complex Fresnel integral `F(τ) = C(τ) + jS(τ)`.
//!
//! ```text
//! C(τ) = ∫₀^τ cos(πt²/2) dt,   S(τ) = ∫₀^τ sin(πt²/2) dt
//! ```
//!
//! Power series below `|τ| = 1.5`, otherwise the modified-Lentz continued
//! fraction for the complementary error function with complex argument.
//! Both branches converge to near machine precision.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::linalg::C64;

const SERIES_LIMIT: f64 = 1.5;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// `F(τ) = C(τ) + jS(τ)`; odd in `τ`.
pub fn fresnel(tau: f64) -> C64 {
    if tau.is_nan() {
        return C64::new(f64::NAN, f64::NAN);
    }
    if tau.is_infinite() {
        return C64::new(0.5, 0.5) * tau.signum();
    }
    let x = tau.abs();
    let value = if x < FPMIN.sqrt() {
        C64::new(x, 0.0)
    } else if x <= SERIES_LIMIT {
        series(x)
    } else {
        continued_fraction(x)
    };
    if tau < 0.0 {
        -value
    } else {
        value
    }
}

fn series(x: f64) -> C64 {
    // Terms alternate between the C and S sums: (π/2 x²)^k x / (k! (2k+1)).
    let fact = FRAC_PI_2 * x * x;
    let mut sum_c = x;
    let mut sum_s = 0.0;
    let mut term = x;
    let mut sign_c = 1.0;
    let mut sign_s = 1.0;
    for k in 1..MAX_ITER {
        term *= fact / k as f64;
        let contrib = term / (2 * k + 1) as f64;
        if k % 2 == 1 {
            sum_s += sign_s * contrib;
            sign_s = -sign_s;
        } else {
            sign_c = -sign_c;
            sum_c += sign_c * contrib;
        }
        if contrib < EPS * sum_c.abs().max(sum_s.abs()) {
            break;
        }
    }
    C64::new(sum_c, sum_s)
}

fn continued_fraction(x: f64) -> C64 {
    let pix2 = PI * x * x;
    let mut b = C64::new(1.0, -pix2);
    let mut cc = C64::new(1.0 / FPMIN, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut n = -1.0;
    for _ in 2..MAX_ITER {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += C64::new(4.0, 0.0);
        d = (d * a + b).inv();
        cc = b + cc.inv() * a;
        let del = cc * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    h *= C64::new(x, -x);
    let (s, c) = (0.5 * pix2).sin_cos();
    C64::new(0.5, 0.5) * (C64::new(1.0, 0.0) - C64::new(c, s) * h)
}
