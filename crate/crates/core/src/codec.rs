//! Wire encodings, password masking and the framed hash `H`.

use std::fmt;

use num_bigint::BigUint;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::group::{GroupElement, GroupParams};

pub const DIGEST_LEN: usize = 32;
pub const MAX_PASSWORD_LEN: usize = 64;
pub const MAX_IDENTITY_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("password must be 1..={MAX_PASSWORD_LEN} bytes, got {0}")]
    PasswordLength(usize),
    #[error("identity must be 1..={MAX_IDENTITY_LEN} bytes, got {0}")]
    IdentityLength(usize),
    #[error("expected {expected} bytes, got {got}")]
    Width { expected: usize, got: usize },
    #[error("decoded value is not in [1, p-1]")]
    OutOfRange,
    #[error("invalid hex: {0}")]
    Hex(String),
}

/// A shared secret, compared byte-for-byte.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Password(Vec<u8>);

impl Password {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, CodecError> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > MAX_PASSWORD_LEN {
            return Err(CodecError::PasswordLength(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self, CodecError> {
        Self::new(hex::decode(s.trim()).map_err(|e| CodecError::Hex(e.to_string()))?)
    }

    /// Recovers a secret from unmasked wire bytes: leading zero bytes added
    /// by [`fit`] are stripped, one byte is always kept, and no upper length
    /// bound applies.
    pub fn recovered(bytes: &[u8]) -> Self {
        let start = bytes.iter().position(|&b| b != 0).unwrap_or(bytes.len().saturating_sub(1));
        Self(bytes[start..].to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    /// Equality after fitting both sides to `width`; the relation the
    /// protocols actually observe.
    pub fn fits_same(&self, other: &Password, width: usize) -> bool {
        fit(self.as_bytes(), width) == fit(other.as_bytes(), width)
    }
}

impl fmt::Debug for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Password({})", self.to_hex())
    }
}

impl fmt::Display for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Identity(Vec<u8>);

impl Identity {
    pub fn from_hex(s: &str) -> Result<Self, CodecError> {
        Self::new(hex::decode(s.trim()).map_err(|e| CodecError::Hex(e.to_string()))?)
    }

    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, CodecError> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > MAX_IDENTITY_LEN {
            return Err(CodecError::IdentityLength(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Identity({})", String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0))
    }
}

/// Bytes XORed with a width-fitted secret.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MaskedBytes(Vec<u8>);

impl MaskedBytes {
    pub fn from_vec(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    /// Checks the declared width.
    pub fn with_width(bytes: &[u8], width: usize) -> Result<Self, CodecError> {
        if bytes.len() != width {
            return Err(CodecError::Width { expected: width, got: bytes.len() });
        }
        Ok(Self(bytes.to_vec()))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for MaskedBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MaskedBytes({})", hex::encode(&self.0))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CodecError::Width { expected: DIGEST_LEN, got: bytes.len() })?;
        Ok(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

/// Fixed-width big-endian encoding, `params.byte_len()` bytes.
pub fn encode_element(params: &GroupParams, x: &GroupElement) -> Vec<u8> {
    encode_uint(x.value(), params.byte_len())
}

pub(crate) fn encode_uint(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    debug_assert!(raw.len() <= width);
    let mut out = vec![0u8; width];
    out[width - raw.len()..].copy_from_slice(&raw);
    out
}

/// Inverse of [`encode_element`]. The element comes back unvalidated.
pub fn decode_element(bytes: &[u8], params: &GroupParams) -> Result<GroupElement, CodecError> {
    if bytes.len() != params.byte_len() {
        return Err(CodecError::Width { expected: params.byte_len(), got: bytes.len() });
    }
    params.element(BigUint::from_bytes_be(bytes)).map_err(|_| CodecError::OutOfRange)
}

/// Left zero-extends `secret` to `width` bytes, or keeps its rightmost
/// `width` bytes when it is longer.
pub fn fit(secret: &[u8], width: usize) -> Vec<u8> {
    if secret.len() >= width {
        secret[secret.len() - width..].to_vec()
    } else {
        let mut out = vec![0u8; width - secret.len()];
        out.extend_from_slice(secret);
        out
    }
}

pub fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    assert_eq!(a.len(), b.len(), "xor operands differ in width");
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// `data XOR fit(secret, len(data))`. An involution.
pub fn mask_with(data: &[u8], secret: &[u8]) -> MaskedBytes {
    MaskedBytes(xor(data, &fit(secret, data.len())))
}

pub fn mask(data: &[u8], pw: &Password) -> MaskedBytes {
    mask_with(data, pw.as_bytes())
}

/// SHA-256 over `len_be32(f1) || f1 || len_be32(f2) || f2 || ...`.
pub fn hash_h(fields: &[&[u8]]) -> Digest {
    Digest(Sha256::digest(frame(fields)).into())
}

/// The exact byte string [`hash_h`] digests.
pub fn frame(fields: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(fields.iter().map(|f| f.len() + 4).sum());
    for field in fields {
        debug_assert!(!field.is_empty(), "hash fields are non-empty");
        out.extend_from_slice(&(field.len() as u32).to_be_bytes());
        out.extend_from_slice(field);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny() -> GroupParams {
        GroupParams::from_u64(23, 11, 4).unwrap()
    }

    fn pw(b: &[u8]) -> Password {
        Password::new(b.to_vec()).unwrap()
    }

    #[test]
    fn encode_examples() {
        let p = tiny();
        let x = p.element(18u32.into()).unwrap();
        assert_eq!(encode_element(&p, &x), vec![0x12]);
        assert_eq!(encode_uint(x.value(), 8), hex::decode("0000000000000012").unwrap());
        for v in 1u32..23 {
            let x = p.element(v.into()).unwrap();
            assert_eq!(decode_element(&encode_element(&p, &x), &p).unwrap(), x);
        }
    }

    #[test]
    fn decode_examples() {
        let p = tiny();
        assert_eq!(decode_element(&[0x12], &p).unwrap().value(), &BigUint::from(18u32));
        assert!(!decode_element(&[0x12], &p).unwrap().is_validated());
        assert_eq!(decode_element(&[0x17], &p), Err(CodecError::OutOfRange));
        assert_eq!(decode_element(&[0x00], &p), Err(CodecError::OutOfRange));
        assert_eq!(decode_element(&[0, 1], &p), Err(CodecError::Width { expected: 1, got: 2 }));
    }

    #[test]
    fn fit_examples() {
        assert_eq!(fit(&[0x07], 1), vec![0x07]);
        assert_eq!(fit(&[0x07], 4), vec![0, 0, 0, 0x07]);
        assert_eq!(fit(&[0xaa, 0xbb, 0xcc], 2), vec![0xbb, 0xcc]);
    }

    #[test]
    fn mask_examples() {
        assert_eq!(mask(&[0x12], &pw(&[0x07])).as_bytes(), &[0x15]);
        assert_eq!(mask(&[0x12], &pw(&[0, 0, 0])).as_bytes(), &[0x12]);
        let once = mask(&[0x12], &pw(&[0x07]));
        assert_eq!(mask(once.as_bytes(), &pw(&[0x07])).as_bytes(), &[0x12]);
    }

    #[test]
    fn password_bounds() {
        assert_eq!(Password::new(vec![]), Err(CodecError::PasswordLength(0)));
        assert_eq!(Password::new(vec![1; 65]), Err(CodecError::PasswordLength(65)));
        assert!(Password::new(vec![1; 64]).is_ok());
        assert!(Identity::new(vec![]).is_err());
        assert!(Identity::new(vec![b'x'; 33]).is_err());
        assert_eq!(Password::from_hex("0b").unwrap(), pw(&[0x0b]));
        assert!(Password::from_hex("0g").is_err());
    }

    #[test]
    fn recovered_strips_fit_padding() {
        assert_eq!(Password::recovered(&[0, 0, 0x0b]), pw(&[0x0b]));
        assert_eq!(Password::recovered(&[0, 0, 0]), pw(&[0]));
        assert_eq!(Password::recovered(&[0x01; 256]).as_bytes().len(), 256);
        assert!(pw(&[0x0b]).fits_same(&pw(&[0, 0x0b]), 8));
    }

    #[test]
    fn framing_is_unambiguous() {
        assert_ne!(hash_h(&[b"a", b"b"]), hash_h(&[b"ab"]));
        assert_ne!(hash_h(&[b"ab", b"c"]), hash_h(&[b"a", b"bc"]));
        assert_eq!(frame(&[b"ab", b"c"]), b"\0\0\0\x02ab\0\0\0\x01c".to_vec());
        assert_eq!(hash_h(&[b"x", b"y"]), hash_h(&[b"x", b"y"]));
    }

    #[test]
    fn field_order_matters() {
        let fields: [&[u8]; 5] = [&[3], &[18], &[3], b"bob", b"alice"];
        let base = hash_h(&fields);
        let mut swapped = fields;
        swapped.swap(3, 4);
        assert_ne!(base, hash_h(&swapped));
        swapped = fields;
        swapped.swap(0, 1);
        assert_ne!(base, hash_h(&swapped));
    }

    #[test]
    fn single_bit_flips_change_the_digest() {
        let fields: Vec<Vec<u8>> = vec![vec![3], vec![18], vec![3], b"bob".to_vec(), b"alice".to_vec()];
        let refs: Vec<&[u8]> = fields.iter().map(Vec::as_slice).collect();
        let base = hash_h(&refs);
        for (i, field) in fields.iter().enumerate() {
            for bit in 0..field.len() * 8 {
                let mut flipped = fields.clone();
                flipped[i][bit / 8] ^= 1 << (bit % 8);
                let refs: Vec<&[u8]> = flipped.iter().map(Vec::as_slice).collect();
                assert_ne!(hash_h(&refs), base, "field {i} bit {bit}");
            }
        }
    }

    proptest! {
        #[test]
        fn mask_is_an_involution(data in prop::collection::vec(any::<u8>(), 1..300), secret in prop::collection::vec(any::<u8>(), 1..=64)) {
            let p = Password::new(secret).unwrap();
            let once = mask(&data, &p);
            let twice = mask(once.as_bytes(), &p);
            prop_assert_eq!(twice.as_bytes(), data.as_slice());
        }

        #[test]
        fn mask_difference_cancels_data(data in prop::collection::vec(any::<u8>(), 1..300),
                                        s1 in prop::collection::vec(any::<u8>(), 1..=64),
                                        s2 in prop::collection::vec(any::<u8>(), 1..=64)) {
            let (p1, p2) = (Password::new(s1).unwrap(), Password::new(s2).unwrap());
            let lhs = xor(mask(&data, &p1).as_bytes(), mask(&data, &p2).as_bytes());
            let rhs = xor(&fit(p1.as_bytes(), data.len()), &fit(p2.as_bytes(), data.len()));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
