//! Complete elliptic integrals (parameter convention, `m = k²`).

use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Runs the arithmetic-geometric mean, returning `(a_N, Σ 2^{n-1} c_n²)`.
fn agm(m: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    (a, sum)
}

fn check(m: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::param(format!("elliptic parameter must lie in [0, 1], got {m}")));
    }
    Ok(())
}

/// `K(m) = ∫₀^{π/2} (1 − m sin²θ)^{-1/2} dθ`, infinite at `m = 1`.
pub fn ellip_k(m: f64) -> Result<f64> {
    check(m)?;
    if m == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(FRAC_PI_2 / agm(m).0)
}

/// `E(m) = ∫₀^{π/2} (1 − m sin²θ)^{1/2} dθ`.
pub fn ellip_e(m: f64) -> Result<f64> {
    check(m)?;
    if m == 1.0 {
        return Ok(1.0);
    }
    let (a, sum) = agm(m);
    Ok(FRAC_PI_2 / a * (1.0 - sum))
}
