//! Small finite fields GF(p^m), just enough for Reed-Solomon style
//! code constructions at desk scale.
//!
//! Elements are indices in `0..q` encoding base-p digit vectors
//! (polynomial coefficients, least significant digit first). For m > 1
//! the reduction polynomial is found by brute-force search, which is
//! instant for the q values this crate accepts.

/// Arithmetic tables for GF(p^m) with q = p^m.
pub(crate) struct FiniteField {
    p: u64,
    m: u32,
    /// Monic reduction polynomial coefficients c_0..c_m (c_m == 1); empty for m == 1.
    reduction: Vec<u64>,
}

/// Returns (p, m) when q = p^m for a prime p and m >= 1.
pub(crate) fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut rest = q;
            let mut m = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                m += 1;
            }
            return if rest == 1 { Some((p, m)) } else { None };
        }
        p += 1;
    }
    Some((q, 1))
}

impl FiniteField {
    pub(crate) fn new(q: u64) -> Option<Self> {
        let (p, m) = prime_power(q)?;
        let reduction = if m == 1 {
            Vec::new()
        } else {
            find_irreducible(p, m)?
        };
        Some(FiniteField { p, m, reduction })
    }

    fn digits(&self, mut x: u64) -> Vec<u64> {
        let mut out = vec![0; self.m as usize];
        for slot in out.iter_mut() {
            *slot = x % self.p;
            x /= self.p;
        }
        out
    }

    fn undigits(&self, ds: &[u64]) -> u64 {
        let mut x = 0;
        for &d in ds.iter().rev() {
            x = x * self.p + d;
        }
        x
    }

    pub(crate) fn add(&self, a: u64, b: u64) -> u64 {
        if self.m == 1 {
            return (a + b) % self.p;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.undigits(&sum)
    }

    pub(crate) fn mul(&self, a: u64, b: u64) -> u64 {
        if self.m == 1 {
            return (a * b) % self.p;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = vec![0u64; 2 * self.m as usize - 1];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        // reduce modulo the monic reduction polynomial
        for i in (self.m as usize..prod.len()).rev() {
            let lead = prod[i];
            if lead == 0 {
                continue;
            }
            prod[i] = 0;
            for (k, &c) in self.reduction.iter().enumerate().take(self.m as usize) {
                let idx = i - self.m as usize + k;
                prod[idx] = (prod[idx] + lead * (self.p - c) % self.p) % self.p;
            }
        }
        self.undigits(&prod[..self.m as usize])
    }

    /// Horner evaluation of a polynomial with coefficients over the field
    /// (highest degree first).
    pub(crate) fn eval_poly(&self, coeffs_high_first: &[u64], x: u64) -> u64 {
        let mut acc = 0;
        for &c in coeffs_high_first {
            acc = self.add(self.mul(acc, x), c);
        }
        acc
    }
}

/// Brute-force a monic irreducible polynomial of degree m over GF(p).
/// Coefficients returned low-to-high including the leading 1.
fn find_irreducible(p: u64, m: u32) -> Option<Vec<u64>> {
    let deg = m as usize;
    let total = p.pow(m);
    'candidates: for tail in 0..total {
        let mut coeffs = Vec::with_capacity(deg + 1);
        let mut x = tail;
        for _ in 0..deg {
            coeffs.push(x % p);
            x /= p;
        }
        coeffs.push(1);
        if coeffs[0] == 0 {
            continue; // divisible by x
        }
        // trial division by every monic polynomial of degree 1..=m/2
        for div_deg in 1..=deg / 2 {
            let count = p.pow(div_deg as u32);
            for dtail in 0..count {
                let mut div = Vec::with_capacity(div_deg + 1);
                let mut y = dtail;
                for _ in 0..div_deg {
                    div.push(y % p);
                    y /= p;
                }
                div.push(1);
                if poly_divides(p, &div, &coeffs) {
                    continue 'candidates;
                }
            }
        }
        return Some(coeffs);
    }
    None
}

/// True when `div` divides `poly` over GF(p), both monic, low-to-high.
fn poly_divides(p: u64, div: &[u64], poly: &[u64]) -> bool {
    let mut rem: Vec<u64> = poly.to_vec();
    let dd = div.len() - 1;
    while rem.len() > dd {
        let lead = *rem.last().unwrap();
        if lead != 0 {
            let shift = rem.len() - 1 - dd;
            for (k, &c) in div.iter().enumerate() {
                let idx = shift + k;
                rem[idx] = (rem[idx] + lead * (p - c % p) % p) % p;
            }
        }
        rem.pop();
    }
    rem.iter().all(|&c| c == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime(n: u64) -> bool {
        n >= 2 && (2..n).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
    }

    #[test]
    fn detects_prime_powers() {
        assert_eq!(prime_power(2), Some((2, 1)));
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(8), Some((2, 3)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(12), None);
        assert_eq!(prime_power(1), None);
        assert!(is_prime(13));
        assert!(!is_prime(15));
    }

    #[test]
    fn field_axioms_spot_check() {
        for q in [2u64, 3, 4, 5, 7, 8, 9] {
            let f = FiniteField::new(q).unwrap();
            // multiplicative inverses exist for all nonzero elements
            for a in 1..q {
                assert!(
                    (1..q).any(|b| f.mul(a, b) == 1),
                    "no inverse for {a} in GF({q})"
                );
            }
            // distributivity on a small sample
            for a in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn poly_eval_horner() {
        let f = FiniteField::new(5).unwrap();
        // 2x^2 + 3x + 1 at x = 4: 32 + 12 + 1 = 45 = 0 mod 5
        assert_eq!(f.eval_poly(&[2, 3, 1], 4), 0);
    }
}
