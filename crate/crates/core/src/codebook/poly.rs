//! Polynomials over GF(2); bit `i` holds the coefficient of `x^i`.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    words: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Self { words: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_exponents([0])
    }

    pub fn from_exponents<I: IntoIterator<Item = usize>>(exps: I) -> Self {
        let mut p = Self::zero();
        for e in exps {
            p.flip(e);
        }
        p.normalize();
        p
    }

    /// `x^n + 1`.
    pub fn x_n_minus_1(n: usize) -> Self {
        Self::from_exponents([0, n])
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    fn flip(&mut self, i: usize) {
        if self.words.len() <= i / 64 {
            self.words.resize(i / 64 + 1, 0);
        }
        self.words[i / 64] ^= 1 << (i % 64);
    }

    fn normalize(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn exponents(&self) -> Vec<usize> {
        let Some(d) = self.degree() else {
            return Vec::new();
        };
        (0..=d).filter(|&i| self.coeff(i)).collect()
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn xor_shifted(&mut self, other: &Gf2Poly, shift: usize) {
        for e in other.exponents() {
            self.flip(e + shift);
        }
    }

    pub fn add(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut out = self.clone();
        out.xor_shifted(other, 0);
        out.normalize();
        out
    }

    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut out = Gf2Poly::zero();
        for e in self.exponents() {
            out.xor_shifted(other, e);
        }
        out.normalize();
        out
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn div_rem(&self, divisor: &Gf2Poly) -> (Gf2Poly, Gf2Poly) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let mut rem = self.clone();
        let mut quot = Gf2Poly::zero();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            quot.flip(rd - dd);
            rem.xor_shifted(divisor, rd - dd);
            rem.normalize();
        }
        quot.normalize();
        (quot, rem)
    }

    pub fn rem(&self, divisor: &Gf2Poly) -> Gf2Poly {
        self.div_rem(divisor).1
    }

    pub fn gcd(&self, other: &Gf2Poly) -> Gf2Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// `x^deg p(1/x)`.
    pub fn reciprocal(&self) -> Gf2Poly {
        let Some(d) = self.degree() else {
            return Gf2Poly::zero();
        };
        Gf2Poly::from_exponents(self.exponents().into_iter().map(|e| d - e))
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .exponents()
            .into_iter()
            .rev()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                e => format!("x^{e}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_basics() {
        let a = Gf2Poly::from_exponents([0, 1]); // 1 + x
        let sq = a.mul(&a);
        assert_eq!(sq, Gf2Poly::from_exponents([0, 2]));
        let (q, r) = Gf2Poly::x_n_minus_1(7).div_rem(&Gf2Poly::from_exponents([0, 1, 3]));
        assert!(r.is_zero());
        assert_eq!(q.degree(), Some(4));
        assert_eq!(
            Gf2Poly::from_exponents([0, 1, 3]).reciprocal(),
            Gf2Poly::from_exponents([0, 2, 3])
        );
        assert_eq!(
            Gf2Poly::x_n_minus_1(15).gcd(&Gf2Poly::x_n_minus_1(9)),
            Gf2Poly::x_n_minus_1(3)
        );
        assert_eq!(format!("{:?}", Gf2Poly::from_exponents([0, 1, 3])), "x^3 + x + 1");
    }

    #[test]
    fn degrees_across_word_boundaries() {
        let p = Gf2Poly::x_n_minus_1(127);
        assert_eq!(p.degree(), Some(127));
        let q = Gf2Poly::from_exponents([0, 70]);
        let prod = p.mul(&q);
        assert_eq!(prod.degree(), Some(197));
        let (back, r) = prod.div_rem(&q);
        assert!(r.is_zero());
        assert_eq!(back, p);
    }
}
