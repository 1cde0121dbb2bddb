//! Modified Bessel functions `I_0`, `I_1`, `K_0`, `K_1` of real argument.
//!
//! `I_ν` uses its power series up to `x = 30` (all terms positive, no
//! cancellation) and the Hankel asymptotic expansion beyond, where the
//! smallest term is below `e^{-2x}`. `K_ν` uses the trapezoid rule on
//! `e^x K_ν(x) = ∫_0^∞ exp(-x (cosh t - 1)) cosh(ν t) dt`, which converges
//! geometrically because the integrand is analytic in a strip of half-width
//! `π/2`. For large `x` the integrand is a Gaussian of width `x^{-1/2}` and
//! the step shrinks with it.

use crate::error::{Error, Result};

/// Largest argument for which `I_0` and `K_0` stay comfortably inside the
/// `f64` range.
pub const MAX_ARGUMENT: f64 = 650.0;

const SERIES_LIMIT: f64 = 30.0;

pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series_i(0, x)
    } else {
        asymptotic_i(0, x)
    }
}

pub fn bessel_i1(x: f64) -> f64 {
    let v = if x.abs() <= SERIES_LIMIT {
        series_i(1, x.abs())
    } else {
        asymptotic_i(1, x.abs())
    };
    v.copysign(x)
}

pub fn bessel_k0(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::K0Domain(x));
    }
    Ok(scaled_k(0, x) * (-x).exp())
}

pub fn bessel_k1(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::K0Domain(x));
    }
    Ok(scaled_k(1, x) * (-x).exp())
}

/// `Σ_k (x/2)^{2k+ν} / (k! (k+ν)!)`.
fn series_i(nu: u32, x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= y / (k * (k + nu as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn asymptotic_i(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * -(mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x.exp() / (2.0 * std::f64::consts::PI * x).sqrt() * sum
}

fn scaled_k(nu: u32, x: f64) -> f64 {
    let step = (0.5 / x.sqrt()).min(0.125);
    let mut sum = 0.5; // t = 0 carries half weight
    let mut k = 1;
    loop {
        let t = k as f64 * step;
        let half = (0.5 * t).sinh();
        let decay = 2.0 * x * half * half; // x (cosh t - 1)
        let weight = if nu == 0 { 1.0 } else { t.cosh() };
        sum += (-decay).exp() * weight;
        if decay > 50.0 + t {
            break;
        }
        k += 1;
    }
    sum * step
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // mpmath, 25 digits
    const TABLE: [(f64, f64, f64, f64, f64); 4] = [
        (
            0.5,
            1.063483370741323519263184,
            0.9244190712276658617819242,
            0.2578943053908963163624797,
            1.656441120003300893696445,
        ),
        (
            1.0,
            1.266065877752008335598245,
            0.4210244382407083333356274,
            0.565159103992485027207696,
            0.60190723019723457473754,
        ),
        (
            5.0,
            27.23987182360444689454423,
            0.003691098334042594274735261,
            24.33564214245052719914305,
            0.004044613445452164208365022,
        ),
        (
            20.0,
            43558282.55955353327210666,
            5.741237815336524292716702e-10,
            42454973.38512777018140991,
            5.883057969557038177650282e-10,
        ),
    ];

    #[test]
    fn matches_reference_table() {
        for &(x, i0, k0, i1, k1) in &TABLE {
            assert!(rel(bessel_i0(x), i0) < 1e-13, "I0({x})");
            assert!(rel(bessel_k0(x).unwrap(), k0) < 1e-13, "K0({x})");
            assert!(rel(bessel_i1(x), i1) < 1e-13, "I1({x})");
            assert!(rel(bessel_k1(x).unwrap(), k1) < 1e-13, "K1({x})");
        }
    }

    #[test]
    fn i0_at_zero_and_k0_at_one() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!((bessel_k0(1.0).unwrap() - 0.421024438241).abs() < 1e-10);
    }

    #[test]
    fn k0_domain_error() {
        assert_eq!(bessel_k0(0.0), Err(Error::K0Domain(0.0)));
        assert!(bessel_k0(-1.0).is_err());
        assert!(bessel_k0(f64::NAN).is_err());
    }

    #[test]
    fn wronskian() {
        // I0 K0' - I0' K0 = -(I0 K1 + I1 K0) = -1/x
        for x in [0.5, 1.0, 5.0, 20.0] {
            let w = -(bessel_i0(x) * bessel_k1(x).unwrap() + bessel_i1(x) * bessel_k0(x).unwrap());
            assert!((w + 1.0 / x).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn wronskian_across_regimes() {
        for x in [1e-8, 1e-3, 0.1, 2.0, 29.9, 30.1, 45.0, 120.0, 600.0] {
            let w = bessel_i0(x) * bessel_k1(x).unwrap() + bessel_i1(x) * bessel_k0(x).unwrap();
            assert!(rel(w, 1.0 / x) < 1e-12, "x={x}: {w}");
        }
    }

    #[test]
    fn small_argument_limits() {
        // K0(x) ~ -ln(x/2) - γ, K1(x) ~ 1/x
        let x = 1e-9;
        let euler = 0.577_215_664_901_532_9;
        assert!(rel(bessel_k0(x).unwrap(), -(x / 2.0).ln() - euler) < 1e-12);
        assert!(rel(bessel_k1(x).unwrap(), 1.0 / x) < 1e-12);
        assert!(bessel_i1(-2.0) < 0.0);
    }
}
