//! Sine and cosine integrals.
//!
//! `sinint` is Si(x) = ∫₀ˣ sin(t)/t dt and `cosint` is
//! Ci(x) = γ + log(x) + ∫₀ˣ (cos(t) − 1)/t dt. These are the only special
//! functions the dipole impedance model needs. Power series below the
//! split point, complex continued fraction for the exponential integral
//! E₁(ix) above it.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.57721566490153286061;

/// Switch point between the power series and the continued fraction.
const SERIES_LIMIT: f64 = 4.0;
const CF_MAX_ITER: usize = 400;
const TINY: f64 = 1e-300;
const EPS: f64 = 1e-16;

/// Cosine integral Ci(x) for x > 0.
pub fn cosint(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain { func: "cosint", arg: x });
    }
    if x <= SERIES_LIMIT {
        // Ci(x) = γ + ln x − Cin(x), Cin via alternating series.
        Ok(EULER_GAMMA + x.ln() - cin_series(x))
    } else {
        Ok(cisi_cf(x).0)
    }
}

/// Sine integral Si(x) for x ≥ 0.
pub fn sinint(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain { func: "sinint", arg: x });
    }
    if x <= SERIES_LIMIT {
        Ok(si_series(x))
    } else {
        Ok(cisi_cf(x).1)
    }
}

/// Cin(x) = ∫₀ˣ (1 − cos t)/t dt = Σ_{k≥1} (−1)^{k+1} x^{2k} / (2k (2k)!).
fn cin_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x2 / 4.0; // k = 1
    let mut sum = term;
    let mut k = 1.0_f64;
    while term.abs() > 1e-18 * sum.abs().max(1.0) {
        term *= -x2 * (2.0 * k) / ((2.0 * k + 2.0) * (2.0 * k + 2.0) * (2.0 * k + 1.0));
        sum += term;
        k += 1.0;
    }
    sum
}

/// Si(x) = Σ_{k≥0} (−1)^k x^{2k+1} / ((2k+1) (2k+1)!).
fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = term;
    let mut k = 0.0_f64;
    while term.abs() > 1e-18 * sum.abs().max(1.0) {
        term *= -x2 * (2.0 * k + 1.0) / ((2.0 * k + 3.0) * (2.0 * k + 3.0) * (2.0 * k + 2.0));
        sum += term;
        k += 1.0;
    }
    sum
}

/// (Ci(x), Si(x)) for x > SERIES_LIMIT via E₁(ix) = −Ci(x) + i(Si(x) − π/2).
///
/// E₁(z) is evaluated with the modified Lentz continued fraction
/// E₁(z) = e^{−z} / (z + 1 − 1²/(z + 3 − 2²/(z + 5 − …))).
fn cisi_cf(x: f64) -> (f64, f64) {
    let z = Complex64::new(0.0, x);
    let mut b = z + Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let a = -((i * i) as f64);
        b += Complex64::new(2.0, 0.0);
        d = (a * d + b).inv();
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - Complex64::new(1.0, 0.0)).norm() < EPS {
            break;
        }
    }
    let e1 = h * Complex64::new(x.cos(), -x.sin()); // e^{-ix} * CF
    (-e1.re, std::f64::consts::FRAC_PI_2 + e1.im)
}
