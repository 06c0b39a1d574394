//! Exact arithmetic in the finite field `F_q`, `q = p^e`.
//!
//! Prime fields use residue arithmetic. Extension fields use polynomial
//! arithmetic modulo a deterministic irreducible: the monic degree-`e`
//! polynomial over `F_p` whose coefficient vector, read as a base-`p` integer
//! with the constant term least significant, is least among all monic
//! irreducibles of that degree. Elements are canonical codes `0..q` under the
//! same digit encoding, so equal elements are bitwise equal and `elements()`
//! yields `0, 1, ...` in a fixed order.
//!
//! Mixing elements of different [`FieldSpec`]s in arithmetic is a programming
//! error and panics; data-dependent failures (inverting zero) return `Err`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 16;
/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("extension degree {0} outside 1..={MAX_DEGREE}")]
    DegreeOutOfRange(u32),
    #[error("field order {0} exceeds {MAX_ORDER}")]
    OrderTooLarge(u64),
    #[error("no irreducible modulus of the requested degree (unreachable for valid inputs)")]
    NoIrreducibleFound,
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct SpecData {
    p: u32,
    e: u32,
    q: u32,
    /// Coefficients of the monic modulus, constant term first, length `e + 1`.
    /// For `e = 1` this is `x`, i.e. `[0, 1]`.
    modulus: Vec<u32>,
}

/// The finite field `F_q` with `q = p^e`. Cheap to clone; immutable.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldSpec(Arc<SpecData>);

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec(q={})", self.0.q)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.e == 1 {
            write!(f, "F_{}", self.0.q)
        } else {
            write!(
                f,
                "F_{} = F_{}[x]/({})",
                self.0.q,
                self.0.p,
                poly_to_string(&self.0.modulus)
            )
        }
    }
}

fn poly_to_string(coeffs: &[u32]) -> String {
    let mut parts = Vec::new();
    for (i, &c) in coeffs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let s = match (i, c) {
            (0, c) => format!("{c}"),
            (1, 1) => "x".to_string(),
            (1, c) => format!("{c}x"),
            (i, 1) => format!("x^{i}"),
            (i, c) => format!("{c}x^{i}"),
        };
        parts.push(s);
    }
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join("+")
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Polynomial helpers over F_p, coefficient vectors with constant term first.
mod poly {
    /// Evaluate at `x` mod `p`.
    pub fn eval(coeffs: &[u32], x: u64, p: u64) -> u64 {
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            acc = (acc * x + c as u64) % p;
        }
        acc
    }

    /// Remainder of `a` divided by monic `b`, both mod `p`.
    pub fn rem(a: &[u32], b: &[u32], p: u64) -> Vec<u32> {
        let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
        let db = b.len() - 1;
        while r.len() > db {
            let lead = *r.last().unwrap() % p;
            let shift = r.len() - 1 - db;
            if lead != 0 {
                for (i, &bc) in b.iter().enumerate() {
                    let idx = shift + i;
                    r[idx] = (r[idx] + p * p - lead * (bc as u64) % p) % p;
                }
            }
            r.pop();
        }
        while r.len() > 1 && *r.last().unwrap() == 0 {
            r.pop();
        }
        r.iter().map(|&c| c as u32).collect()
    }

    pub fn is_zero(a: &[u32]) -> bool {
        a.iter().all(|&c| c == 0)
    }
}

/// Irreducibility over F_p for degree <= 4: degrees 2 and 3 reduce to root
/// exhaustion; degree 4 additionally rules out irreducible-quadratic factors.
fn is_irreducible(coeffs: &[u32], p: u64) -> bool {
    let deg = coeffs.len() - 1;
    debug_assert!((2..=4).contains(&deg));
    for x in 0..p {
        if poly::eval(coeffs, x, p) == 0 {
            return false;
        }
    }
    if deg == 4 {
        // A rootless quartic can still split into two irreducible quadratics.
        for c0 in 0..p as u32 {
            for c1 in 0..p as u32 {
                let g = [c0, c1, 1];
                let rootless = (0..p).all(|x| poly::eval(&g, x, p) != 0);
                if rootless && poly::is_zero(&poly::rem(coeffs, &g, p)) {
                    return false;
                }
            }
        }
    }
    true
}

impl FieldSpec {
    /// Construct `F_{p^e}`. The modulus choice is deterministic (least monic
    /// irreducible in base-`p` coefficient order), so two calls with the same
    /// arguments yield equal specs.
    pub fn new(p: u64, e: u32) -> Result<FieldSpec, GfError> {
        if !is_prime(p) {
            return Err(GfError::NonPrime(p));
        }
        if !(1..=MAX_DEGREE).contains(&e) {
            return Err(GfError::DegreeOutOfRange(e));
        }
        let q = p.checked_pow(e).filter(|&q| q <= MAX_ORDER).ok_or(GfError::OrderTooLarge(
            p.saturating_pow(e),
        ))?;
        let modulus = if e == 1 {
            vec![0, 1]
        } else {
            Self::least_irreducible(p, e)?
        };
        Ok(FieldSpec(Arc::new(SpecData {
            p: p as u32,
            e,
            q: q as u32,
            modulus,
        })))
    }

    /// Construct the field with `q` elements, factoring `q` as a prime power.
    pub fn of_order(q: u64) -> Result<FieldSpec, GfError> {
        if q < 2 {
            return Err(GfError::NotAPrimePower(q));
        }
        let mut p = 2;
        while p * p <= q {
            if q.is_multiple_of(p) {
                let mut e = 0;
                let mut rest = q;
                while rest.is_multiple_of(p) {
                    rest /= p;
                    e += 1;
                }
                if rest != 1 {
                    return Err(GfError::NotAPrimePower(q));
                }
                return FieldSpec::new(p, e);
            }
            p += 1;
        }
        FieldSpec::new(q, 1) // q itself is prime
    }

    fn least_irreducible(p: u64, e: u32) -> Result<Vec<u32>, GfError> {
        let count = p.pow(e);
        for code in 0..count {
            let mut coeffs: Vec<u32> = Vec::with_capacity(e as usize + 1);
            let mut rest = code;
            for _ in 0..e {
                coeffs.push((rest % p) as u32);
                rest /= p;
            }
            coeffs.push(1); // monic
            if is_irreducible(&coeffs, p) {
                return Ok(coeffs);
            }
        }
        Err(GfError::NoIrreducibleFound)
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn extension_degree(&self) -> u32 {
        self.0.e
    }

    /// The field order `q = p^e`.
    pub fn order(&self) -> u32 {
        self.0.q
    }

    /// Modulus coefficients, constant term first (length `e + 1`).
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// The element with canonical code `code` (base-`p` digits are the
    /// polynomial coefficients, constant term least significant).
    pub fn element(&self, code: u32) -> FieldElement {
        assert!(code < self.0.q, "element code {code} out of range for {self}");
        FieldElement {
            spec: self.clone(),
            code,
        }
    }

    /// Embedding of an integer through the prime subfield (`n mod p`).
    pub fn from_int(&self, n: i64) -> FieldElement {
        let p = self.0.p as i64;
        self.element(n.rem_euclid(p) as u32)
    }

    /// All `q` elements in canonical order: `0`, `1`, then increasing code.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.0.q).map(move |c| self.element(c))
    }

    fn digits(&self, code: u32) -> [u32; MAX_DEGREE as usize] {
        let p = self.0.p;
        let mut d = [0u32; MAX_DEGREE as usize];
        let mut rest = code;
        for slot in d.iter_mut().take(self.0.e as usize) {
            *slot = rest % p;
            rest /= p;
        }
        d
    }

    fn undigits(&self, d: &[u32]) -> u32 {
        let p = self.0.p;
        let mut code = 0u32;
        for &c in d.iter().take(self.0.e as usize).rev() {
            code = code * p + c;
        }
        code
    }

    pub(crate) fn vadd(&self, a: u32, b: u32) -> u32 {
        let p = self.0.p;
        if self.0.e == 1 {
            return (a + b) % p;
        }
        let da = self.digits(a);
        let db = self.digits(b);
        let mut out = [0u32; MAX_DEGREE as usize];
        for i in 0..self.0.e as usize {
            out[i] = (da[i] + db[i]) % p;
        }
        self.undigits(&out)
    }

    pub(crate) fn vneg(&self, a: u32) -> u32 {
        let p = self.0.p;
        if self.0.e == 1 {
            return (p - a) % p;
        }
        let da = self.digits(a);
        let mut out = [0u32; MAX_DEGREE as usize];
        for i in 0..self.0.e as usize {
            out[i] = (p - da[i]) % p;
        }
        self.undigits(&out)
    }

    pub(crate) fn vsub(&self, a: u32, b: u32) -> u32 {
        self.vadd(a, self.vneg(b))
    }

    pub(crate) fn vmul(&self, a: u32, b: u32) -> u32 {
        let p = self.0.p as u64;
        if self.0.e == 1 {
            return ((a as u64 * b as u64) % p) as u32;
        }
        let e = self.0.e as usize;
        let da = self.digits(a);
        let db = self.digits(b);
        // schoolbook product, degree <= 2e-2
        let mut prod = [0u64; 2 * MAX_DEGREE as usize - 1];
        for i in 0..e {
            for j in 0..e {
                prod[i + j] = (prod[i + j] + da[i] as u64 * db[j] as u64) % p;
            }
        }
        // reduce by the monic modulus
        let m = &self.0.modulus;
        for d in (e..2 * e - 1).rev() {
            let lead = prod[d];
            if lead != 0 {
                prod[d] = 0;
                for (i, &mc) in m.iter().enumerate().take(e) {
                    let idx = d - e + i;
                    prod[idx] = (prod[idx] + p * p - lead * mc as u64 % p) % p;
                }
            }
        }
        let out: Vec<u32> = prod[..e].iter().map(|&c| c as u32).collect();
        self.undigits(&out)
    }

    pub(crate) fn vpow(&self, a: u32, mut n: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.vmul(acc, base);
            }
            base = self.vmul(base, base);
            n >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat: `a^(q-2)`.
    pub(crate) fn vinv(&self, a: u32) -> Result<u32, GfError> {
        if a == 0 {
            return Err(GfError::DivisionByZero);
        }
        Ok(self.vpow(a, self.0.q as u64 - 2))
    }
}

/// An element of `F_q`, stored as its canonical code together with the field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    spec: FieldSpec,
    code: u32,
}

impl FieldElement {
    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Canonical code in `0..q`.
    pub fn code(&self) -> u32 {
        self.code
    }

    /// Coefficients over the prime subfield, constant term first (length `e`).
    pub fn coefficients(&self) -> Vec<u32> {
        self.spec.digits(self.code)[..self.spec.0.e as usize].to_vec()
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    pub fn inv(&self) -> Result<FieldElement, GfError> {
        Ok(FieldElement {
            spec: self.spec.clone(),
            code: self.spec.vinv(self.code)?,
        })
    }

    pub fn pow(&self, n: u64) -> FieldElement {
        FieldElement {
            spec: self.spec.clone(),
            code: self.spec.vpow(self.code, n),
        }
    }

    fn assert_same_spec(&self, other: &FieldElement) {
        assert_eq!(
            self.spec, other.spec,
            "field spec mismatch: {} vs {}",
            self.spec, other.spec
        );
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}∈{}", self.code, self.spec)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_spec(&rhs);
        FieldElement {
            code: self.spec.vadd(self.code, rhs.code),
            spec: self.spec,
        }
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_spec(&rhs);
        FieldElement {
            code: self.spec.vsub(self.code, rhs.code),
            spec: self.spec,
        }
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_spec(&rhs);
        FieldElement {
            code: self.spec.vmul(self.code, rhs.code),
            spec: self.spec,
        }
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            code: self.spec.vneg(self.code),
            spec: self.spec,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_small_fields() -> Vec<FieldSpec> {
        // every prime power q <= 16
        [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (11, 1), (13, 1), (2, 4)]
            .iter()
            .map(|&(p, e)| FieldSpec::new(p, e).unwrap())
            .collect()
    }

    #[test]
    fn construction_examples() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        assert_eq!(f2.order(), 2);
        assert_eq!(f2.modulus(), &[0, 1]); // x

        // only irreducible monic quadratic over F_2 is x^2+x+1
        let f4 = FieldSpec::new(2, 2).unwrap();
        assert_eq!(f4.order(), 4);
        assert_eq!(f4.modulus(), &[1, 1, 1]);

        let f5 = FieldSpec::new(5, 1).unwrap();
        assert_eq!(f5.order(), 5);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(FieldSpec::new(4, 1).unwrap_err(), GfError::NonPrime(4));
        assert_eq!(FieldSpec::new(6, 2).unwrap_err(), GfError::NonPrime(6));
        assert_eq!(FieldSpec::new(2, 0).unwrap_err(), GfError::DegreeOutOfRange(0));
        assert_eq!(FieldSpec::new(2, 5).unwrap_err(), GfError::DegreeOutOfRange(5));
        assert!(matches!(FieldSpec::new(65537, 1), Err(GfError::OrderTooLarge(_))));
        assert!(matches!(FieldSpec::new(257, 2), Err(GfError::OrderTooLarge(_))));
    }

    #[test]
    fn modulus_is_irreducible_for_all_small_fields() {
        for spec in all_small_fields() {
            if spec.extension_degree() == 1 {
                continue;
            }
            // no roots in F_p
            for x in 0..spec.p() as u64 {
                assert_ne!(poly::eval(spec.modulus(), x, spec.p() as u64), 0);
            }
        }
    }

    #[test]
    fn arithmetic_examples() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        assert_eq!(f2.one() + f2.one(), f2.zero());

        let f5 = FieldSpec::new(5, 1).unwrap();
        assert_eq!(f5.element(2).inv().unwrap(), f5.element(3)); // 2*3 = 6 = 1 mod 5

        // F_4 with modulus x^2+x+1: x*x = x+1
        let f4 = FieldSpec::new(2, 2).unwrap();
        let x = f4.element(2);
        assert_eq!(x.clone() * x, f4.element(3));
    }

    #[test]
    fn element_order_examples() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        let codes: Vec<u32> = f2.elements().map(|e| e.code()).collect();
        assert_eq!(codes, vec![0, 1]);

        let f3 = FieldSpec::new(3, 1).unwrap();
        assert_eq!(f3.elements().count(), 3);

        // F_4: 0, 1, x, x+1
        let f4 = FieldSpec::new(2, 2).unwrap();
        let coeffs: Vec<Vec<u32>> = f4.elements().map(|e| e.coefficients()).collect();
        assert_eq!(coeffs, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn field_axioms_exhaustive_q_le_16() {
        for spec in all_small_fields() {
            let els: Vec<FieldElement> = spec.elements().collect();
            for a in &els {
                for b in &els {
                    // commutativity
                    assert_eq!(a.clone() + b.clone(), b.clone() + a.clone());
                    assert_eq!(a.clone() * b.clone(), b.clone() * a.clone());
                    for c in &els {
                        let assoc_add = (a.clone() + b.clone()) + c.clone()
                            == a.clone() + (b.clone() + c.clone());
                        let assoc_mul = (a.clone() * b.clone()) * c.clone()
                            == a.clone() * (b.clone() * c.clone());
                        let distrib = a.clone() * (b.clone() + c.clone())
                            == a.clone() * b.clone() + a.clone() * c.clone();
                        assert!(assoc_add && assoc_mul && distrib, "axioms fail in {spec}");
                    }
                }
            }
        }
    }

    #[test]
    fn multiplicative_group_order() {
        for spec in all_small_fields() {
            let q = spec.order() as u64;
            for a in spec.elements().skip(1) {
                assert_eq!(a.pow(q - 1), spec.one(), "a^(q-1) != 1 in {spec}");
                let inv = a.inv().unwrap();
                assert_eq!(inv * a, spec.one());
            }
        }
    }

    #[test]
    fn of_order_factors_prime_powers() {
        assert_eq!(FieldSpec::of_order(4).unwrap(), FieldSpec::new(2, 2).unwrap());
        assert_eq!(FieldSpec::of_order(7).unwrap(), FieldSpec::new(7, 1).unwrap());
        assert_eq!(FieldSpec::of_order(27).unwrap(), FieldSpec::new(3, 3).unwrap());
        assert_eq!(FieldSpec::of_order(12).unwrap_err(), GfError::NotAPrimePower(12));
        assert_eq!(FieldSpec::of_order(1).unwrap_err(), GfError::NotAPrimePower(1));
    }

    #[test]
    fn inverse_of_zero_fails() {
        let f7 = FieldSpec::new(7, 1).unwrap();
        assert_eq!(f7.zero().inv().unwrap_err(), GfError::DivisionByZero);
    }

    #[test]
    #[should_panic(expected = "field spec mismatch")]
    fn mixing_specs_panics() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        let f3 = FieldSpec::new(3, 1).unwrap();
        let _ = f2.one() + f3.one();
    }

    #[test]
    fn canonical_representation_is_bitwise() {
        let f9 = FieldSpec::new(3, 2).unwrap();
        for a in f9.elements() {
            for b in f9.elements() {
                if a.code() == b.code() {
                    assert_eq!(a, b);
                }
            }
        }
        // same construction twice gives interchangeable specs
        let again = FieldSpec::new(3, 2).unwrap();
        assert_eq!(f9, again);
        assert_eq!(f9.element(5) + again.element(7), again.element(5) + f9.element(7));
    }
}
