//! Radial potentials φ: ℝ₊ → ℝ₊ generating G(T) = φ′(|T|) T/|T|.

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::quadrature::integrate_gl16;

/// Strictly convex radial potential with φ(0) = φ′(0) = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarPotential {
    /// φ′(s) = s / (1 + s^q)^{1/q}; strain-limiting with L = 1.
    Prototype { q: f64 },
    /// φ(s) = s^p / p.
    PowerLaw { p: f64 },
    /// φ(s) = s² / 2, i.e. G(T) = T.
    Linear,
}

impl ScalarPotential {
    pub fn prototype(q: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidInput(format!("prototype exponent q must be >= 1 (got {q})")));
        }
        Ok(ScalarPotential::Prototype { q })
    }

    pub fn power_law(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidInput(format!("power-law exponent p must be > 1 (got {p})")));
        }
        Ok(ScalarPotential::PowerLaw { p })
    }

    /// φ(s)
    pub fn phi(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match *self {
            ScalarPotential::Prototype { q } => prototype_phi(q, s),
            ScalarPotential::PowerLaw { p } => s.powf(p) / p,
            ScalarPotential::Linear => 0.5 * s * s,
        }
    }

    /// φ′(s)
    pub fn dphi(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match *self {
            ScalarPotential::Prototype { q } => {
                if s <= 1.0 {
                    s * inv_root(1.0 + pow_q(s, q), q)
                } else {
                    inv_root(1.0 + pow_q(s.recip(), q), q)
                }
            }
            ScalarPotential::PowerLaw { p } => s.powf(p - 1.0),
            ScalarPotential::Linear => s,
        }
    }

    /// φ″(s); +∞ at s = 0 for power laws with p < 2.
    pub fn d2phi(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match *self {
            ScalarPotential::Prototype { q } => {
                if s <= 1.0 {
                    let y = 1.0 + pow_q(s, q);
                    inv_root(y, q) / y
                } else {
                    let w = pow_q(s.recip(), q);
                    let y = 1.0 + w;
                    w / s * inv_root(y, q) / y
                }
            }
            ScalarPotential::PowerLaw { p } => {
                if s == 0.0 {
                    power_law_limit_at_zero(p)
                } else {
                    (p - 1.0) * s.powf(p - 2.0)
                }
            }
            ScalarPotential::Linear => 1.0,
        }
    }

    /// φ′(s)/s with its limit φ″(0) at s = 0.
    pub fn secant(&self, s: f64) -> f64 {
        match *self {
            ScalarPotential::Prototype { q } => {
                if s <= 1.0 {
                    inv_root(1.0 + pow_q(s, q), q)
                } else {
                    inv_root(1.0 + pow_q(s.recip(), q), q) / s
                }
            }
            ScalarPotential::PowerLaw { p } => {
                if s == 0.0 {
                    power_law_limit_at_zero(p)
                } else {
                    s.powf(p - 2.0)
                }
            }
            ScalarPotential::Linear => 1.0,
        }
    }

    /// L = lim_{s→∞} φ′(s).
    pub fn limit(&self) -> Extended {
        match self {
            ScalarPotential::Prototype { .. } => Extended::Finite(1.0),
            ScalarPotential::PowerLaw { .. } | ScalarPotential::Linear => Extended::PosInfinity,
        }
    }

    /// Convex conjugate φ*(e) = sup_{r≥0} (e·r − φ(r)); +∞ for e ≥ L.
    pub fn phi_star(&self, e: f64) -> Extended {
        debug_assert!(e >= 0.0);
        super::ConstitutiveModel::bare(*self).conjugate(e)
    }
}

fn power_law_limit_at_zero(p: f64) -> f64 {
    if p < 2.0 {
        f64::INFINITY
    } else if p == 2.0 {
        1.0
    } else {
        0.0
    }
}

/// φ(s) = ∫₀ˢ t (1 + t^q)^{-1/q} dt. Closed forms for q ∈ {1, 2}; otherwise
/// 16-point Gauss–Legendre on a dyadic partition of [0, s].
fn prototype_phi(q: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        // s - ln(1+s), series near zero to avoid cancellation
        if s < 1e-3 {
            let mut term = s * s / 2.0;
            let mut sum = 0.0;
            let mut k = 2.0;
            while term.abs() > 1e-19 * s * s {
                sum += term;
                term *= -s * k / (k + 1.0);
                k += 1.0;
            }
            return sum;
        }
        return s - s.ln_1p();
    }
    if q == 2.0 {
        return s * s / ((1.0 + s * s).sqrt() + 1.0);
    }
    let dphi = |t: f64| ScalarPotential::Prototype { q }.dphi(t);
    // dyadic breakpoints ... 2^-2, 2^-1, 1, 2, 4, ... clipped to s
    let mut total = 0.0;
    let mut lo = s.min(1.0) * 2f64.powi(-40);
    total += 0.5 * lo * lo; // φ(t) ≈ t²/2 below the first breakpoint
    while lo < s {
        let hi = (lo * 2.0).min(s);
        total += integrate_gl16(lo, hi, dphi);
        lo = hi;
    }
    total
}

/// s^q with exact fast paths for q = 1, 2.
fn pow_q(s: f64, q: f64) -> f64 {
    if q == 2.0 {
        s * s
    } else if q == 1.0 {
        s
    } else {
        s.powf(q)
    }
}

/// y^{-1/q}
fn inv_root(y: f64, q: f64) -> f64 {
    if q == 2.0 {
        y.sqrt().recip()
    } else if q == 1.0 {
        y.recip()
    } else {
        y.powf(-1.0 / q)
    }
}
