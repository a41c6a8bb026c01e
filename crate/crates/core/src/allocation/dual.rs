use std::ops::{Add, Mul, Sub};

/// Value paired with its derivative with respect to supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub const ZERO: Dual = Dual { v: 0.0, d: 0.0 };

    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }

    pub fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }

    /// Lexicographic minimum on `(value, derivative)`. Values within `tol`
    /// count as equal, so at a breakpoint the branch taken is the one the
    /// direction of travel leads into.
    pub fn lex_min(self, other: Dual, tol: f64) -> Dual {
        if self.v < other.v - tol {
            self
        } else if self.v > other.v + tol {
            other
        } else {
            Dual {
                v: self.v.min(other.v),
                d: self.d.min(other.d),
            }
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, k: f64) -> Dual {
        Dual::new(self.v * k, self.d * k)
    }
}
