//! Scalar maps `m(z) = cos sqrt z`, `n(z) = 2 m'(z)`, the Dirichlet set
//! `Sigma = {(k pi)^2 : k >= 1}`, spectral bands between consecutive points of
//! `Sigma`, the per-band inverse of `m`, and the operator-valued Weyl function
//! `M(z) = (m(z) - P) / n(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::discrete::{TransitionOperator, DEFAULT_TOL};
use crate::entire::{cos_sqrt, sinc_sqrt, sinc_sqrt_deriv, C64};
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Distance to `Sigma` below which a real point counts as a pole.
pub const SIGMA_TOL: f64 = 10.0 * DEFAULT_TOL;
/// `mu` closer than this to `+-1` has its preimage in `Sigma` (bands where that applies).
pub const MU_EDGE_TOL: f64 = 10.0 * DEFAULT_TOL;

/// `m`, `m'`, `n`, `n'` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMaps {
    pub m: C64,
    pub m_prime: C64,
    pub n: C64,
    pub n_prime: C64,
}

impl ScalarMaps {
    pub fn at(z: C64) -> Self {
        let g = sinc_sqrt(z);
        let g1 = sinc_sqrt_deriv(1, z);
        // m' = -g/2, m'' = -g'/2
        ScalarMaps {
            m: cos_sqrt(z),
            m_prime: -g * 0.5,
            n: -g,
            n_prime: -g1,
        }
    }

    pub fn real(lambda: f64) -> Self {
        Self::at(Complex64::from(lambda))
    }

    /// `sqrt(n / m')`, the normalization of the intertwiner.
    pub fn normalization(&self) -> f64 {
        (self.n / self.m_prime).re.sqrt()
    }
}

pub fn scalar_maps(z: C64) -> ScalarMaps {
    ScalarMaps::at(z)
}

/// `((k pi)^2, ((k+1) pi)^2)`, with band 0 extended down to `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub k: usize,
}

impl Band {
    pub fn new(k: usize) -> Self {
        Band { k }
    }

    pub fn lower(&self) -> f64 {
        if self.k == 0 {
            f64::NEG_INFINITY
        } else {
            (self.k as f64 * PI).powi(2)
        }
    }

    pub fn upper(&self) -> f64 {
        ((self.k + 1) as f64 * PI).powi(2)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lower() < lambda && lambda < self.upper()
    }

    /// Sign of `m'` on the band.
    pub fn slope_sign(&self) -> f64 {
        if self.k % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Band containing `lambda`, if `lambda` is not in `Sigma`.
    pub fn of(lambda: f64) -> Option<Band> {
        if lambda < PI * PI {
            return (lambda < PI * PI - SIGMA_TOL).then_some(Band { k: 0 });
        }
        let (_, d) = sigma_distance(lambda);
        if d <= SIGMA_TOL {
            return None;
        }
        Some(Band {
            k: (lambda.sqrt() / PI).floor() as usize,
        })
    }

    /// Image `m(J)` of the whole band as a closed interval of `mu`.
    pub fn image(&self) -> (f64, f64) {
        if self.k == 0 {
            (-1.0, f64::INFINITY)
        } else {
            (-1.0, 1.0)
        }
    }
}

/// The unique `lambda` in band `k` with `cos sqrt lambda = mu`.
pub fn band_inverse(k: usize, mu: f64) -> Result<f64> {
    if !(-1.0 - MU_EDGE_TOL..=1.0 + MU_EDGE_TOL).contains(&mu) {
        return Err(Error::OutOfRange {
            value: mu,
            range: "[-1, 1]".into(),
        });
    }
    let lower_hit = mu <= -1.0 + MU_EDGE_TOL;
    let upper_hit = mu >= 1.0 - MU_EDGE_TOL;
    if lower_hit || (k >= 1 && upper_hit) {
        return Err(Error::SigmaCollision { band: k, mu });
    }
    let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
    let arg = (parity * mu).clamp(-1.0, 1.0);
    Ok((k as f64 * PI + arg.acos()).powi(2))
}

/// Nearest point of `Sigma` and the distance to it.
pub fn sigma_distance(lambda: f64) -> (f64, f64) {
    let guess = (lambda.max(0.0).sqrt() / PI).round().max(1.0) as usize;
    let mut best = (f64::NAN, f64::INFINITY);
    for k in guess.saturating_sub(1).max(1)..=guess + 1 {
        let s = (k as f64 * PI).powi(2);
        let d = (lambda - s).abs();
        if d < best.1 {
            best = (s, d);
        }
    }
    best
}

/// Errors with `SigmaPole` when `z` is (numerically) a pole of `M`.
pub fn check_off_sigma(z: C64) -> Result<()> {
    if z.im.abs() <= SIGMA_TOL {
        if sigma_distance(z.re).1 <= SIGMA_TOL {
            return Err(Error::pole(z));
        }
    } else if sinc_sqrt(z).norm() < 1e-14 {
        return Err(Error::pole(z));
    }
    Ok(())
}

/// `M(z) = (m(z) I - P) / n(z)`.
pub fn weyl_matrix(p: &TransitionOperator, z: C64) -> Result<CMat> {
    check_off_sigma(z)?;
    let maps = ScalarMaps::at(z);
    let n = p.space().dim();
    let mut out = -p.complex_matrix();
    for i in 0..n {
        out[(i, i)] += maps.m;
    }
    Ok(out / maps.n)
}

/// `M'(lambda) = (m'/n) I - (n'/n^2)(m - P)` for real `lambda`.
pub fn weyl_derivative(p: &TransitionOperator, lambda: f64) -> Result<CMat> {
    let z = Complex64::from(lambda);
    check_off_sigma(z)?;
    let s = ScalarMaps::at(z);
    let n = p.space().dim();
    let mut m_minus_p = -p.complex_matrix();
    for i in 0..n {
        m_minus_p[(i, i)] += s.m;
    }
    let id = CMat::identity(n, n);
    Ok(id * (s.m_prime / s.n) - m_minus_p * (s.n_prime / (s.n * s.n)))
}
