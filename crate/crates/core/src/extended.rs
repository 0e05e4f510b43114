use std::fmt;

/// A real number or +∞.
///
/// Used wherever +∞ carries meaning (strain limit of a non-limiting model,
/// conjugate energy beyond the limit) so that it never arises from a silent
/// floating overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInfinity => None,
        }
    }

    /// Unwraps a finite value, panicking on +∞.
    pub fn expect_finite(self, msg: &str) -> f64 {
        self.finite().unwrap_or_else(|| panic!("{msg}"))
    }

    /// `self - x`, with ∞ - x = ∞.
    pub fn minus(self, x: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(v - x),
            Extended::PosInfinity => Extended::PosInfinity,
        }
    }

    /// Strict comparison `x < self`.
    pub fn exceeds(self, x: f64) -> bool {
        match self {
            Extended::Finite(v) => x < v,
            Extended::PosInfinity => true,
        }
    }

    /// Lossy conversion for output; +∞ maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PosInfinity => write!(f, "inf"),
        }
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        Extended::Finite(v)
    }
}
