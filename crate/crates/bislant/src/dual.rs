//! First-order dual numbers for forward-mode differentiation.
//!
//! A `Dual` carries a value and the derivative of that value with respect to
//! one seed variable. Propagating duals through an expression tree yields the
//! exact partial derivative (no truncation error), which is what the frame
//! and identity checks build on.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub fn constant(x: f64) -> Self {
        Dual { re: x, du: 0.0 }
    }

    /// Seed for the variable being differentiated.
    pub fn variable(x: f64) -> Self {
        Dual { re: x, du: 1.0 }
    }

    pub fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            du: self.re.cos() * self.du,
        }
    }

    pub fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            du: -self.re.sin() * self.du,
        }
    }

    pub fn tan(self) -> Self {
        let c = self.re.cos();
        Dual {
            re: self.re.tan(),
            du: self.du / (c * c),
        }
    }

    pub fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            du: e * self.du,
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re + rhs.re,
            du: self.du + rhs.du,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re - rhs.re,
            du: self.du - rhs.du,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re * rhs.re,
            du: self.re * rhs.du + self.du * rhs.re,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re / rhs.re,
            du: (self.du * rhs.re - self.re * rhs.du) / (rhs.re * rhs.re),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            du: -self.du,
        }
    }
}
