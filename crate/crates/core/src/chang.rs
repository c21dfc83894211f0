//! The three-message password-change protocol under attack.
//!
//! ```text
//! A -> B : (R_A ^ pw) || (R_A ^ new_pw)          R_A = g^a
//! B -> A : R_B || H(K_B, R_A)                    R_B = g^b, K_B = R_A^b
//! A -> B : H(K_A, R_B) ^ new_pw                  K_A = R_B^a
//! ```
//!
//! Bob accepts when unmasking the last message with the `new_pw` he pulled
//! out of the first one yields `H(K_B, R_B)`. Alice never checks Bob's tag.
//! Every weakness the attacks rely on is kept as is.

use crate::codec::{self, decode_element, encode_element, hash_h, mask, mask_with, xor, Digest, MaskedBytes, Password, DIGEST_LEN};
use crate::error::ProtocolError;
use crate::group::{Exponent, GroupElement, GroupParams, SharedKey};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangMsg1 {
    pub x1: MaskedBytes,
    pub x2: MaskedBytes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangMsg2 {
    pub r_b: GroupElement,
    pub tag: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangMsg3 {
    pub masked_tag: MaskedBytes,
}

impl ChangMsg1 {
    pub fn to_bytes(&self) -> Vec<u8> {
        [self.x1.as_bytes(), self.x2.as_bytes()].concat()
    }

    pub fn from_bytes(bytes: &[u8], params: &GroupParams) -> Result<Self, ProtocolError> {
        let n = params.byte_len();
        let bytes = MaskedBytes::with_width(bytes, 2 * n).map_err(ProtocolError::Malformed)?;
        let (x1, x2) = bytes.as_bytes().split_at(n);
        Ok(Self { x1: MaskedBytes::from_vec(x1.to_vec()), x2: MaskedBytes::from_vec(x2.to_vec()) })
    }
}

impl ChangMsg2 {
    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        [encode_element(params, &self.r_b).as_slice(), self.tag.as_bytes()].concat()
    }

    pub fn from_bytes(bytes: &[u8], params: &GroupParams) -> Result<Self, ProtocolError> {
        let n = params.byte_len();
        if bytes.len() != n + DIGEST_LEN {
            return Err(ProtocolError::Malformed(codec::CodecError::Width { expected: n + DIGEST_LEN, got: bytes.len() }));
        }
        let r_b = decode_element(&bytes[..n], params).map_err(|_| ProtocolError::InvalidElement)?;
        let tag = Digest::from_bytes(&bytes[n..]).map_err(ProtocolError::Malformed)?;
        Ok(Self { r_b, tag })
    }
}

impl ChangMsg3 {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.masked_tag.as_bytes().to_vec()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let masked_tag = MaskedBytes::with_width(bytes, DIGEST_LEN).map_err(ProtocolError::Malformed)?;
        Ok(Self { masked_tag })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlicePhase {
    Init,
    Sent1,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobPhase {
    Init,
    Sent2,
    Accepted,
    Rejected,
}

/// `H(K, R)` over canonical encodings.
pub fn key_tag(params: &GroupParams, key: &SharedKey, element: &GroupElement) -> Digest {
    hash_h(&[&encode_element(params, key.element()), &encode_element(params, element)])
}

#[derive(Debug, Clone)]
pub struct ChangAlice {
    params: GroupParams,
    pw: Password,
    new_pw: Password,
    a: Exponent,
    r_a: GroupElement,
    k_a: Option<SharedKey>,
    phase: AlicePhase,
}

impl ChangAlice {
    /// Step 1. A no-op change (`pw == new_pw`) is allowed; see
    /// [`ChangAlice::is_noop_change`].
    pub fn step1(params: &GroupParams, pw: Password, new_pw: Password, a: Exponent) -> (Self, ChangMsg1) {
        let r_a = params.public(&a);
        let encoded = encode_element(params, &r_a);
        let msg = ChangMsg1 { x1: mask(&encoded, &pw), x2: mask(&encoded, &new_pw) };
        let state = Self { params: params.clone(), pw, new_pw, a, r_a, k_a: None, phase: AlicePhase::Sent1 };
        (state, msg)
    }

    /// Step 3. Bob's tag is deliberately not checked.
    pub fn step3(&mut self, msg2: &ChangMsg2) -> Result<ChangMsg3, ProtocolError> {
        if self.phase != AlicePhase::Sent1 {
            return Err(ProtocolError::WrongPhase("alice/step3"));
        }
        let r_b = self.params.validated(msg2.r_b.clone()).ok_or(ProtocolError::InvalidElement)?;
        let k_a = self.params.dh_key(&r_b, &self.a).map_err(|_| ProtocolError::InvalidElement)?;
        let tag = key_tag(&self.params, &k_a, &r_b);
        let masked_tag = mask(tag.as_bytes(), &self.new_pw);
        self.k_a = Some(k_a);
        self.phase = AlicePhase::Done;
        Ok(ChangMsg3 { masked_tag })
    }

    pub fn phase(&self) -> AlicePhase {
        self.phase
    }

    pub fn r_a(&self) -> &GroupElement {
        &self.r_a
    }

    pub fn key(&self) -> Option<&SharedKey> {
        self.k_a.as_ref()
    }

    pub fn pw(&self) -> &Password {
        &self.pw
    }

    pub fn new_pw(&self) -> &Password {
        &self.new_pw
    }

    pub fn is_noop_change(&self) -> bool {
        self.pw == self.new_pw
    }
}

#[derive(Debug, Clone)]
pub struct ChangBob {
    params: GroupParams,
    stored_pw: Password,
    b: Exponent,
    r_a: GroupElement,
    r_b: GroupElement,
    new_pw_recovered: Password,
    k_b: SharedKey,
    phase: BobPhase,
}

impl ChangBob {
    /// Step 2. Unmasks `R_A` with the stored password and `new_pw` with
    /// `R_A`. An error means the session is rejected and nothing changed.
    pub fn step2(params: &GroupParams, stored_pw: Password, msg1: &ChangMsg1, b: Exponent) -> Result<(Self, ChangMsg2), ProtocolError> {
        let n = params.byte_len();
        if msg1.x1.len() != n || msg1.x2.len() != n {
            return Err(ProtocolError::Malformed(codec::CodecError::Width { expected: n, got: msg1.x1.len().max(msg1.x2.len()) }));
        }
        let ra_bytes = mask(msg1.x1.as_bytes(), &stored_pw);
        let r_a = decode_element(ra_bytes.as_bytes(), params).map_err(|_| ProtocolError::OutOfRange)?;
        let r_a = params.validated(r_a).ok_or(ProtocolError::SubgroupFail)?;
        let new_pw_recovered = Password::recovered(&xor(ra_bytes.as_bytes(), msg1.x2.as_bytes()));

        let k_b = params.dh_key(&r_a, &b).map_err(|_| ProtocolError::InvalidElement)?;
        let r_b = params.public(&b);
        let tag = key_tag(params, &k_b, &r_a);
        let msg = ChangMsg2 { r_b: r_b.clone(), tag };
        let state = Self { params: params.clone(), stored_pw, b, r_a, r_b, new_pw_recovered, k_b, phase: BobPhase::Sent2 };
        Ok((state, msg))
    }

    /// Step 3 on Bob's side. Rejection is a phase, not an error.
    pub fn finish(&mut self, msg3: &ChangMsg3) -> BobPhase {
        if self.phase != BobPhase::Sent2 {
            return self.phase;
        }
        let unmasked = mask_with(msg3.masked_tag.as_bytes(), self.new_pw_recovered.as_bytes());
        let expected = key_tag(&self.params, &self.k_b, &self.r_b);
        if unmasked.as_bytes() == expected.as_bytes() {
            self.stored_pw = self.new_pw_recovered.clone();
            self.phase = BobPhase::Accepted;
        } else {
            self.phase = BobPhase::Rejected;
        }
        self.phase
    }

    pub fn phase(&self) -> BobPhase {
        self.phase
    }

    /// The password Bob will check next session.
    pub fn stored_pw(&self) -> &Password {
        &self.stored_pw
    }

    pub fn new_pw_recovered(&self) -> &Password {
        &self.new_pw_recovered
    }

    pub fn r_a(&self) -> &GroupElement {
        &self.r_a
    }

    pub fn r_b(&self) -> &GroupElement {
        &self.r_b
    }

    pub fn key(&self) -> &SharedKey {
        &self.k_b
    }

    pub fn b(&self) -> &Exponent {
        &self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn tiny() -> GroupParams {
        GroupParams::from_u64(23, 11, 4).unwrap()
    }

    fn pw(b: u8) -> Password {
        Password::new(vec![b]).unwrap()
    }

    fn run(p: &GroupParams, a: u64, b: u64) -> (ChangAlice, ChangBob, ChangMsg1, ChangMsg2, ChangMsg3) {
        let (mut alice, m1) = ChangAlice::step1(p, pw(0x07), pw(0x0b), p.exponent_u64(a).unwrap());
        let (bob, m2) = ChangBob::step2(p, pw(0x07), &m1, p.exponent_u64(b).unwrap()).unwrap();
        let m3 = alice.step3(&m2).unwrap();
        (alice, bob, m1, m2, m3)
    }

    #[test]
    fn step1_masks_r_a_twice() {
        let p = tiny();
        let (alice, m1) = ChangAlice::step1(&p, pw(0x07), pw(0x0b), p.exponent_u64(3).unwrap());
        assert_eq!(m1.x1.as_bytes(), &[0x15]);
        assert_eq!(m1.x2.as_bytes(), &[0x19]);
        assert_eq!(alice.phase(), AlicePhase::Sent1);

        let (alice, m1) = ChangAlice::step1(&p, pw(0x07), pw(0x07), p.exponent_u64(3).unwrap());
        assert_eq!(m1.x1, m1.x2);
        assert!(alice.is_noop_change());
    }

    #[test]
    fn step2_recovers_r_a_and_new_pw() {
        let p = tiny();
        let (_, bob, _, m2, _) = run(&p, 3, 5);
        assert_eq!(bob.r_a().value(), &BigUint::from(18u32));
        assert_eq!(bob.new_pw_recovered(), &pw(0x0b));
        assert_eq!(m2.r_b.value(), &BigUint::from(12u32));
        assert_eq!(bob.key().value(), &BigUint::from(3u32));
        assert_eq!(m2.tag, key_tag(&p, bob.key(), bob.r_a()));
    }

    #[test]
    fn step2_rejects_bad_unmasking() {
        let p = tiny();
        let b = p.exponent_u64(5).unwrap();
        // x1 chosen so the stored password unmasks it to zero
        let zero = ChangMsg1 { x1: MaskedBytes::from_vec(vec![0x07]), x2: MaskedBytes::from_vec(vec![0x19]) };
        assert_eq!(ChangBob::step2(&p, pw(0x07), &zero, b.clone()).unwrap_err(), ProtocolError::OutOfRange);

        // wrong stored password: 0x15 ^ 0x01 = 0x14 = 20, and 20 has order 22
        assert_ne!((0..11).fold(1u64, |acc, _| acc * 20 % 23), 1);
        let (_, m1) = ChangAlice::step1(&p, pw(0x07), pw(0x0b), p.exponent_u64(3).unwrap());
        assert_eq!(ChangBob::step2(&p, pw(0x01), &m1, b).unwrap_err(), ProtocolError::SubgroupFail);
    }

    #[test]
    fn step3_derives_the_same_key() {
        let p = tiny();
        let (alice, bob, _, _, m3) = run(&p, 3, 5);
        assert_eq!(alice.key().unwrap().value(), &BigUint::from(3u32));
        assert_eq!(alice.key().unwrap(), bob.key());
        assert_eq!(alice.phase(), AlicePhase::Done);
        let tag = key_tag(&p, alice.key().unwrap(), bob.r_b());
        assert_eq!(mask(m3.masked_tag.as_bytes(), &pw(0x0b)).as_bytes(), tag.as_bytes());
    }

    #[test]
    fn step3_rejects_invalid_r_b() {
        let p = tiny();
        let (mut alice, _) = ChangAlice::step1(&p, pw(0x07), pw(0x0b), p.exponent_u64(3).unwrap());
        let mut wire = vec![0u8];
        wire.extend_from_slice(&[0u8; 32]);
        assert_eq!(ChangMsg2::from_bytes(&wire, &p).unwrap_err(), ProtocolError::InvalidElement);
        wire[0] = 22;
        let m2 = ChangMsg2::from_bytes(&wire, &p).unwrap();
        assert_eq!(alice.step3(&m2).unwrap_err(), ProtocolError::InvalidElement);
        assert_eq!(alice.phase(), AlicePhase::Sent1);
    }

    #[test]
    fn finish_accepts_honest_and_rejects_flips() {
        let p = tiny();
        let (_, mut bob, _, _, m3) = run(&p, 3, 5);
        let mut flipped_bob = bob.clone();
        assert_eq!(bob.finish(&m3), BobPhase::Accepted);
        assert_eq!(bob.stored_pw(), &pw(0x0b));

        let mut bytes = m3.to_bytes();
        bytes[31] ^= 0x40;
        assert_eq!(flipped_bob.finish(&ChangMsg3::from_bytes(&bytes).unwrap()), BobPhase::Rejected);
        assert_eq!(flipped_bob.stored_pw(), &pw(0x07));
    }

    #[test]
    fn xor_with_c_in_both_places_is_accepted() {
        let p = tiny();
        let c = 0x05u8;
        let (mut alice, m1) = ChangAlice::step1(&p, pw(0x07), pw(0x0b), p.exponent_u64(3).unwrap());
        let tampered = ChangMsg1 { x1: m1.x1.clone(), x2: MaskedBytes::from_vec(vec![m1.x2.as_bytes()[0] ^ c]) };
        let (mut bob, m2) = ChangBob::step2(&p, pw(0x07), &tampered, p.exponent_u64(5).unwrap()).unwrap();
        let m3 = alice.step3(&m2).unwrap();
        let m3 = ChangMsg3 { masked_tag: mask_with(m3.masked_tag.as_bytes(), &[c]) };
        assert_eq!(bob.finish(&m3), BobPhase::Accepted);
        assert_eq!(bob.stored_pw(), &pw(0x0b ^ c));
    }

    #[test]
    fn wire_roundtrip() {
        let p = tiny();
        let (_, _, m1, m2, m3) = run(&p, 3, 5);
        assert_eq!(ChangMsg1::from_bytes(&m1.to_bytes(), &p).unwrap(), m1);
        assert_eq!(ChangMsg2::from_bytes(&m2.to_bytes(&p), &p).unwrap(), m2);
        assert_eq!(ChangMsg3::from_bytes(&m3.to_bytes()).unwrap(), m3);
        assert!(matches!(ChangMsg1::from_bytes(&[1, 2, 3], &p), Err(ProtocolError::Malformed(_))));
    }
}
