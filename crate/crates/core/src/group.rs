//! Prime-order subgroup arithmetic shared by both password-change protocols.
//!
//! Parameters are `(p, q, g)` with `q | p - 1` and `g` of order `q`. Every
//! value that crosses the wire is a [`GroupElement`]; secrets are
//! [`Exponent`]s in `[1, q - 1]`.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("{which} is not prime")]
    NotPrime { which: &'static str },
    #[error("q does not divide p - 1")]
    OrderMismatch,
    #[error("g does not generate the order-q subgroup")]
    BadGenerator,
    #[error("element out of range [1, p-1]")]
    InvalidElement,
    #[error("exponent out of range [1, q-1]")]
    InvalidExponent,
}

/// Bases for the Miller-Rabin test. Deterministic for every n < 3.3e24,
/// and an ordinary probabilistic check above that.
const MR_BASES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &b in &MR_BASES {
        let b = BigUint::from(b);
        if *n == b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }

    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    'witness: for &b in &MR_BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Diffie-Hellman group description.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    byte_len: usize,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("p", &format_args!("{:x}", self.p))
            .field("q", &format_args!("{:x}", self.q))
            .field("g", &format_args!("{:x}", self.g))
            .field("byte_len", &self.byte_len)
            .finish()
    }
}

impl GroupParams {
    /// Validates `(p, q, g)` and computes the canonical encoding width.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, GroupError> {
        if !is_probable_prime(&p) {
            return Err(GroupError::NotPrime { which: "p" });
        }
        if !is_probable_prime(&q) {
            return Err(GroupError::NotPrime { which: "q" });
        }
        if !((&p - 1u32) % &q).is_zero() {
            return Err(GroupError::OrderMismatch);
        }
        if g.is_zero() || g.is_one() || g >= p || !g.modpow(&q, &p).is_one() {
            return Err(GroupError::BadGenerator);
        }
        let byte_len = p.bits().div_ceil(8) as usize;
        Ok(Self { p, q, g, byte_len })
    }

    pub fn from_u64(p: u64, q: u64, g: u64) -> Result<Self, GroupError> {
        Self::new(p.into(), q.into(), g.into())
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// Width in bytes of every encoded element.
    pub fn byte_len(&self) -> usize {
        self.byte_len
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement { value: self.g.clone(), validated: true }
    }

    /// Wraps a raw value as an element, checking only the range `[1, p-1]`.
    /// The result is unvalidated until [`GroupParams::validate_subgroup`] runs.
    pub fn element(&self, value: BigUint) -> Result<GroupElement, GroupError> {
        if value.is_zero() || value >= self.p {
            return Err(GroupError::InvalidElement);
        }
        Ok(GroupElement { value, validated: false })
    }

    pub fn exponent(&self, value: BigUint) -> Result<Exponent, GroupError> {
        if value.is_zero() || value >= self.q {
            return Err(GroupError::InvalidExponent);
        }
        Ok(Exponent(value))
    }

    pub fn exponent_u64(&self, value: u64) -> Result<Exponent, GroupError> {
        self.exponent(value.into())
    }

    /// `base^e mod p` for an arbitrary non-negative exponent.
    pub fn pow(&self, base: &GroupElement, e: &BigUint) -> BigUint {
        base.value.modpow(e, &self.p)
    }

    /// `base^e mod p`. Output of an exponentiation stays in the subgroup
    /// exactly when the base did, so the validation flag carries over.
    pub fn modexp(&self, base: &GroupElement, e: &Exponent) -> GroupElement {
        let value = self.pow(base, &e.0);
        debug_assert!(!value.is_zero());
        GroupElement { value, validated: base.validated }
    }

    /// `g^e mod p`.
    pub fn public(&self, e: &Exponent) -> GroupElement {
        self.modexp(&self.generator(), e)
    }

    pub fn validate_subgroup(&self, x: &GroupElement) -> bool {
        self.pow(x, &self.q).is_one()
    }

    /// Check applied to every element a party receives: subgroup member and
    /// not the identity. Returns the element marked validated.
    pub fn validated(&self, mut x: GroupElement) -> Option<GroupElement> {
        if !x.value.is_one() && self.validate_subgroup(&x) {
            x.validated = true;
            Some(x)
        } else {
            None
        }
    }

    pub fn dh_key(&self, peer_public: &GroupElement, own_secret: &Exponent) -> Result<SharedKey, GroupError> {
        if peer_public.value.is_zero() || peer_public.value >= self.p {
            return Err(GroupError::InvalidElement);
        }
        Ok(SharedKey(self.modexp(peer_public, own_secret)))
    }

    /// Uniform draw from `[1, q-1]`, fully determined by `rng`.
    pub fn random_exponent<R: RngCore + ?Sized>(&self, rng: &mut R) -> Exponent {
        Exponent(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }
}

/// Equality and hashing look at the value only, not the validation flag.
#[derive(Clone)]
pub struct GroupElement {
    value: BigUint,
    validated: bool,
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl Eq for GroupElement {}

impl std::hash::Hash for GroupElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.value.hash(state);
    }
}

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// True once the element has passed a subgroup check (or was produced
    /// from one that had).
    pub fn is_validated(&self) -> bool {
        self.validated
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({:#x}{})", self.value, if self.validated { "" } else { ", unvalidated" })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Exponent(BigUint);

impl Exponent {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exponent({:#x})", self.0)
    }
}

/// A Diffie-Hellman output.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SharedKey(GroupElement);

impl SharedKey {
    /// Treats an arbitrary element as a key, e.g. an attacker's guess.
    pub fn from_element(e: GroupElement) -> Self {
        SharedKey(e)
    }

    pub fn element(&self) -> &GroupElement {
        &self.0
    }

    pub fn value(&self) -> &BigUint {
        &self.0.value
    }
}
