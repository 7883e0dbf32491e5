//! Entire functions of `z` that appear once the edge frequency `w = sqrt(z)`
//! is eliminated: `cos(w)` and `g(z) = sin(w)/w`. Both are even in `w`, so no
//! branch cut survives. Every closed-form edge integral in the crate reduces to
//! values and first divided differences of `g`.

use num_complex::Complex64;

pub(crate) type C64 = Complex64;

/// Below this modulus values are taken from the Taylor series.
pub const VALUE_SERIES_RADIUS: f64 = 1e-4;
/// Derivatives and divided differences use the series up to this modulus; the
/// closed forms cancel catastrophically near the origin.
pub const DERIV_SERIES_RADIUS: f64 = 9.0;
const DIRECT_DIFF_MIN: f64 = 0.05;
const MAX_TERMS: usize = 80;

/// Frequency with the `Im w >= 0` convention.
pub fn frequency(z: C64) -> C64 {
    let w = z.sqrt();
    if w.im < 0.0 || (w.im == 0.0 && w.re < 0.0) {
        -w
    } else {
        w
    }
}

fn series(z: C64, coeff: impl Fn(usize) -> f64, min_terms: usize) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    let mut pow = C64::new(1.0, 0.0);
    for j in 0..MAX_TERMS {
        let term = pow * coeff(j);
        sum += term;
        if j >= min_terms && term.norm() <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        pow *= z;
    }
    sum
}

fn inv_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc / k as f64)
}

/// `cos(sqrt z)` by its power series.
pub fn cos_sqrt_series(z: C64) -> C64 {
    series(z, |j| sign(j) * inv_factorial(2 * j), 8)
}

/// `sin(sqrt z)/sqrt z` by its power series.
pub fn sinc_sqrt_series(z: C64) -> C64 {
    series(z, |j| sign(j) * inv_factorial(2 * j + 1), 8)
}

fn sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn cos_sqrt_closed(z: C64) -> C64 {
    frequency(z).cos()
}

pub fn sinc_sqrt_closed(z: C64) -> C64 {
    let w = frequency(z);
    w.sin() / w
}

pub fn cos_sqrt(z: C64) -> C64 {
    if z.norm() < VALUE_SERIES_RADIUS {
        cos_sqrt_series(z)
    } else {
        cos_sqrt_closed(z)
    }
}

pub fn sinc_sqrt(z: C64) -> C64 {
    if z.norm() < VALUE_SERIES_RADIUS {
        sinc_sqrt_series(z)
    } else {
        sinc_sqrt_closed(z)
    }
}

/// Spherical Bessel functions `j_0..=j_kmax` by upward recurrence; accurate
/// for `|r| >= 3` and small orders.
fn spherical_bessel(r: C64, kmax: usize) -> Vec<C64> {
    let (s, c) = (r.sin(), r.cos());
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(s / r);
    if kmax >= 1 {
        out.push(s / (r * r) - c / r);
    }
    for k in 1..kmax {
        let next = out[k] * ((2 * k + 1) as f64) / r - out[k - 1];
        out.push(next);
    }
    out
}

/// k-th derivative of `g(z) = sin(sqrt z)/sqrt z`.
pub fn sinc_sqrt_deriv(k: usize, z: C64) -> C64 {
    if k == 0 {
        return sinc_sqrt(z);
    }
    if z.norm() <= DERIV_SERIES_RADIUS {
        // g^(k)(z) = sum_{j>=k} (-1)^j j!/(j-k)! z^(j-k) / (2j+1)!
        series(
            z,
            |i| {
                let j = i + k;
                let falling: f64 = ((i + 1)..=j).map(|v| v as f64).product();
                sign(j) * falling * inv_factorial(2 * j + 1)
            },
            8,
        )
    } else {
        // g^(k)(z) = (-1/2)^k j_k(r) / r^k with r = sqrt z
        let r = frequency(z);
        let jk = spherical_bessel(r, k)[k];
        jk * (-0.5f64).powi(k as i32) / r.powi(k as i32)
    }
}

/// First divided difference `g[a, b] = (g(a) - g(b)) / (a - b)`, with the
/// confluent limit `g'(a)` when the nodes coincide.
pub fn sinc_sqrt_divdiff(a: C64, b: C64) -> C64 {
    if a == b {
        return sinc_sqrt_deriv(1, a);
    }
    if a.norm().max(b.norm()) <= DERIV_SERIES_RADIUS {
        // sum_j c_j (a^j - b^j)/(a - b) = sum_{j>=1} c_j h_{j-1}(a, b)
        let mut sum = C64::new(0.0, 0.0);
        let mut h = C64::new(1.0, 0.0); // complete homogeneous h_{j-1}
        let mut bpow = C64::new(1.0, 0.0);
        for j in 1..MAX_TERMS {
            let term = h * (sign(j) * inv_factorial(2 * j + 1));
            sum += term;
            if j >= 8 && term.norm() <= 1e-18 * sum.norm().max(1e-300) {
                break;
            }
            bpow *= b;
            h = a * h + bpow;
        }
        return sum;
    }
    let diff = a - b;
    if diff.norm() > DIRECT_DIFF_MIN {
        return (sinc_sqrt(a) - sinc_sqrt(b)) / diff;
    }
    // Taylor about the midpoint: only odd derivatives survive.
    let c = (a + b) * 0.5;
    let d = diff * 0.5;
    let r = frequency(c);
    let j = spherical_bessel(r, 7);
    let d2 = d * d;
    let mut sum = C64::new(0.0, 0.0);
    let mut dpow = C64::new(1.0, 0.0);
    for k in [1usize, 3, 5, 7] {
        let deriv = j[k] * (-0.5f64).powi(k as i32) / r.powi(k as i32);
        sum += deriv * dpow * inv_factorial(k);
        dpow *= d2;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn series_and_closed_forms_agree_on_the_overlap_annulus() {
        for k in 0..32 {
            let theta = k as f64 * std::f64::consts::TAU / 32.0;
            for rad in [0.5e-4, 1e-4, 2e-4] {
                let z = C64::from_polar(rad, theta);
                assert!((cos_sqrt_series(z) - cos_sqrt_closed(z)).norm() < 1e-10);
                assert!((sinc_sqrt_series(z) - sinc_sqrt_closed(z)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn derivative_branches_meet_at_the_series_radius() {
        for k in 1..=4 {
            for theta in [0.0, 0.7, 2.0, 3.1] {
                let inside = sinc_sqrt_deriv(k, C64::from_polar(DERIV_SERIES_RADIUS - 1e-13, theta));
                let outside = sinc_sqrt_deriv(k, C64::from_polar(DERIV_SERIES_RADIUS + 1e-13, theta));
                assert!(
                    (inside - outside).norm() < 1e-10 * inside.norm().max(1e-3),
                    "k={k} theta={theta} {inside} {outside}"
                );
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for z in [c(0.3, 0.0), c(20.0, 0.5), c(-16.0, 0.0), c(50.0, -3.0)] {
            let h = 1e-5;
            let fd = (sinc_sqrt(z + h) - sinc_sqrt(z - h)) / (2.0 * h);
            let an = sinc_sqrt_deriv(1, z);
            assert!((fd - an).norm() < 1e-8 * an.norm().max(1.0));
        }
    }

    #[test]
    fn divided_difference_is_continuous_across_branches() {
        let base = c(30.0, 1.0);
        for eps in [1.0, 0.1, 0.049, 0.051, 1e-3, 1e-7, 0.0] {
            let a = base + eps;
            let dd = sinc_sqrt_divdiff(a, base);
            // reference from the integral representation g[a,b] = int_0^1 g'(b + s(a-b)) ds
            let n = 400;
            let mut reference = C64::new(0.0, 0.0);
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                reference += sinc_sqrt_deriv(1, base + (a - base) * s);
            }
            reference /= n as f64;
            assert!((dd - reference).norm() < 1e-7 * reference.norm(), "eps={eps}");
        }
    }

    #[test]
    fn known_values() {
        assert!((sinc_sqrt(c(0.0, 0.0)) - 1.0).norm() < 1e-16);
        assert!((sinc_sqrt_deriv(1, c(0.0, 0.0)) + 1.0 / 6.0).norm() < 1e-16);
        let cosh1 = 1.0f64.cosh();
        assert!((cos_sqrt(c(-1.0, 0.0)) - cosh1).norm() < 1e-15);
        let z = c(std::f64::consts::PI.powi(2), 0.0);
        assert!(sinc_sqrt(z).norm() < 1e-15);
    }
}
