use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use super::SymMat;

fn zip_with(a: &SymMat, b: &SymMat, f: impl Fn(f64, f64) -> f64) -> SymMat {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch");
    let upper = a.upper().iter().zip(b.upper()).map(|(x, y)| f(*x, *y)).collect();
    SymMat::from_upper(a.dim(), upper).unwrap_or_else(|_| unreachable!("length preserved"))
}

impl Add<&SymMat> for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub<&SymMat> for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Add for SymMat {
    type Output = SymMat;
    fn add(mut self, rhs: SymMat) -> SymMat {
        self += &rhs;
        self
    }
}

impl Sub for SymMat {
    type Output = SymMat;
    fn sub(mut self, rhs: SymMat) -> SymMat {
        self -= &rhs;
        self
    }
}

impl Add<&SymMat> for SymMat {
    type Output = SymMat;
    fn add(mut self, rhs: &SymMat) -> SymMat {
        self += rhs;
        self
    }
}

impl Sub<&SymMat> for SymMat {
    type Output = SymMat;
    fn sub(mut self, rhs: &SymMat) -> SymMat {
        self -= rhs;
        self
    }
}

impl AddAssign<&SymMat> for SymMat {
    fn add_assign(&mut self, rhs: &SymMat) {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.upper_mut().iter_mut().zip(rhs.upper()).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&SymMat> for SymMat {
    fn sub_assign(&mut self, rhs: &SymMat) {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.upper_mut().iter_mut().zip(rhs.upper()).for_each(|(a, b)| *a -= b);
    }
}

impl Mul<f64> for &SymMat {
    type Output = SymMat;
    fn mul(self, s: f64) -> SymMat {
        let mut out = self.clone();
        out.upper_mut().iter_mut().for_each(|a| *a *= s);
        out
    }
}

impl Mul<f64> for SymMat {
    type Output = SymMat;
    fn mul(mut self, s: f64) -> SymMat {
        self.upper_mut().iter_mut().for_each(|a| *a *= s);
        self
    }
}

impl Mul<&SymMat> for f64 {
    type Output = SymMat;
    fn mul(self, m: &SymMat) -> SymMat {
        m * self
    }
}

impl Mul<SymMat> for f64 {
    type Output = SymMat;
    fn mul(self, m: SymMat) -> SymMat {
        m * self
    }
}

impl Neg for &SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        self * -1.0
    }
}

impl Neg for SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        self * -1.0
    }
}
