//! Small binary extension fields GF(2^m), m <= 8, via log/antilog tables.

use super::poly::Gf2Poly;

/// x^5 + x^2 + 1
pub const PRIMITIVE_GF32: u16 = 0b10_0101;
/// x^7 + x^3 + 1
pub const PRIMITIVE_GF128: u16 = 0b1000_1001;

#[derive(Clone, Debug)]
pub struct BinaryField {
    m: u32,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl BinaryField {
    /// Builds GF(2^m) from a primitive polynomial given as a bit mask including
    /// the `x^m` term. Panics if the polynomial is not primitive.
    pub fn new(m: u32, primitive: u16) -> Self {
        assert!((2..=8).contains(&m));
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x: u16 = 1;
        for (i, slot) in exp.iter_mut().enumerate().take(order) {
            *slot = x;
            assert!(
                i == 0 || x != 1,
                "polynomial {primitive:#b} is not primitive"
            );
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= primitive;
            }
        }
        assert_eq!(x, 1, "polynomial {primitive:#b} is not primitive");
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Self { m, order, exp, log }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Multiplicative order 2^m - 1.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `alpha^i`.
    pub fn alpha_pow(&self, i: usize) -> u16 {
        self.exp[i % self.order]
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Cyclotomic coset of `i` modulo `2^m - 1`, ascending.
    pub fn cyclotomic_coset(&self, i: usize) -> Vec<usize> {
        cyclotomic_coset(i, self.order)
    }

    /// Minimal polynomial over GF(2) of `alpha^i`.
    pub fn minimal_polynomial(&self, i: usize) -> Gf2Poly {
        // coefficients in GF(2^m), lowest degree first
        let mut coeffs: Vec<u16> = vec![1];
        for c in self.cyclotomic_coset(i) {
            let root = self.alpha_pow(c);
            let mut next = vec![0u16; coeffs.len() + 1];
            for (d, &a) in coeffs.iter().enumerate() {
                next[d + 1] ^= a;
                next[d] ^= self.mul(a, root);
            }
            coeffs = next;
        }
        assert!(
            coeffs.iter().all(|&c| c <= 1),
            "minimal polynomial must have binary coefficients"
        );
        Gf2Poly::from_exponents(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == 1)
                .map(|(d, _)| d),
        )
    }
}

/// The set `{ i * 2^j mod n }`, ascending.
pub fn cyclotomic_coset(i: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = i % n;
    loop {
        out.push(x);
        x = (2 * x) % n;
        if x == i % n {
            break;
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_polynomials_gf32() {
        let f = BinaryField::new(5, PRIMITIVE_GF32);
        assert_eq!(f.minimal_polynomial(1), Gf2Poly::from_exponents([0, 2, 5]));
        for i in [1, 3, 5, 7, 11, 15] {
            let p = f.minimal_polynomial(i);
            assert_eq!(p.degree(), Some(5));
            assert!(Gf2Poly::x_n_minus_1(31).rem(&p).is_zero());
        }
        assert_eq!(f.minimal_polynomial(0), Gf2Poly::from_exponents([0, 1]));
    }

    #[test]
    fn cosets_mod_127() {
        assert_eq!(cyclotomic_coset(1, 127), vec![1, 2, 4, 8, 16, 32, 64]);
        assert!(cyclotomic_coset(9, 127).contains(&17));
        let f = BinaryField::new(7, PRIMITIVE_GF128);
        assert_eq!(f.minimal_polynomial(1), Gf2Poly::from_exponents([0, 3, 7]));
    }

    #[test]
    #[should_panic]
    fn rejects_non_primitive() {
        // x^4 + x^3 + x^2 + x + 1 has order 5
        BinaryField::new(4, 0b1_1111);
    }
}
