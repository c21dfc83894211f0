//! The replacement password-change protocol.
//!
//! ```text
//! A -> B : (R_A ^ pw) || (R_B ^ new_pw)                      R_A = g^a, R_B = g^b
//! B -> A : R_C || H(Key_1, R_A, R_B ^ new_pw, ID_B, ID_A)    R_C = g^c, Key_1 = R_A^c
//! A -> B : H(Key_1, Key_2, R_C, ID_A, ID_B)                  Key_2 = R_C^b
//! ```
//!
//! Bob cannot open `R_B ^ new_pw` until the last message arrives. He then
//! walks an ordered candidate list, unmasking `R_B'` with each candidate and
//! checking `H(Key_1, R_B'^c, R_C, ID_A, ID_B)` against the tag.

use crate::codec::{self, decode_element, encode_element, hash_h, mask, Digest, Identity, MaskedBytes, Password, DIGEST_LEN};
use crate::error::ProtocolError;
use crate::group::{Exponent, GroupElement, GroupParams, SharedKey};

/// Default bound on Step-4 candidate trials.
pub const DEFAULT_MAX_ITERATIONS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropMsg1 {
    pub x1: MaskedBytes,
    pub x2: MaskedBytes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropMsg2 {
    pub r_c: GroupElement,
    pub tag: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropMsg3 {
    pub tag: Digest,
}

impl PropMsg1 {
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

impl PropMsg2 {
    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        [encode_element(params, &self.r_c).as_slice(), self.tag.as_bytes()].concat()
    }

    pub fn from_bytes(bytes: &[u8], params: &GroupParams) -> Result<Self, ProtocolError> {
        let n = params.byte_len();
        if bytes.len() != n + DIGEST_LEN {
            return Err(ProtocolError::Malformed(codec::CodecError::Width { expected: n + DIGEST_LEN, got: bytes.len() }));
        }
        let r_c = decode_element(&bytes[..n], params).map_err(|_| ProtocolError::InvalidElement)?;
        let tag = Digest::from_bytes(&bytes[n..]).map_err(ProtocolError::Malformed)?;
        Ok(Self { r_c, tag })
    }
}

impl PropMsg3 {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.tag.as_bytes().to_vec()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        Ok(Self { tag: Digest::from_bytes(bytes).map_err(ProtocolError::Malformed)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlicePhase {
    Init,
    Sent1,
    Done,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobPhase {
    Init,
    Sent2,
    Accepted,
    Rejected,
}

/// `H(Key_1, R_A, x2, ID_B, ID_A)`, Bob's Step-2 tag.
pub fn step2_tag(params: &GroupParams, key1: &SharedKey, r_a: &GroupElement, x2: &MaskedBytes, id_a: &Identity, id_b: &Identity) -> Digest {
    hash_h(&[
        &encode_element(params, key1.element()),
        &encode_element(params, r_a),
        x2.as_bytes(),
        id_b.as_bytes(),
        id_a.as_bytes(),
    ])
}

/// `H(Key_1, Key_2, R_C, ID_A, ID_B)`, Alice's Step-3 tag.
pub fn step3_tag(params: &GroupParams, key1: &SharedKey, key2: &SharedKey, r_c: &GroupElement, id_a: &Identity, id_b: &Identity) -> Digest {
    hash_h(&[
        &encode_element(params, key1.element()),
        &encode_element(params, key2.element()),
        &encode_element(params, r_c),
        id_a.as_bytes(),
        id_b.as_bytes(),
    ])
}

#[derive(Debug, Clone)]
pub struct PropAlice {
    params: GroupParams,
    pw: Password,
    new_pw: Password,
    a: Exponent,
    b: Exponent,
    r_a: GroupElement,
    r_b: GroupElement,
    x2_sent: MaskedBytes,
    key1: Option<SharedKey>,
    key2: Option<SharedKey>,
    id_a: Identity,
    id_b: Identity,
    phase: AlicePhase,
}

impl PropAlice {
    #[allow(clippy::too_many_arguments)]
    pub fn step1(params: &GroupParams, pw: Password, new_pw: Password, a: Exponent, b: Exponent, id_a: Identity, id_b: Identity) -> (Self, PropMsg1) {
        let r_a = params.public(&a);
        let r_b = params.public(&b);
        let msg = PropMsg1 {
            x1: mask(&encode_element(params, &r_a), &pw),
            x2: mask(&encode_element(params, &r_b), &new_pw),
        };
        let state = Self {
            params: params.clone(),
            pw,
            new_pw,
            a,
            b,
            r_a,
            r_b,
            x2_sent: msg.x2.clone(),
            key1: None,
            key2: None,
            id_a,
            id_b,
            phase: AlicePhase::Sent1,
        };
        (state, msg)
    }

    /// Step 3. Any failure aborts the session and produces no message.
    pub fn step3(&mut self, msg2: &PropMsg2) -> Result<PropMsg3, ProtocolError> {
        if self.phase != AlicePhase::Sent1 {
            return Err(ProtocolError::WrongPhase("alice/step3"));
        }
        let result = self.try_step3(msg2);
        if result.is_err() {
            self.phase = AlicePhase::Aborted;
        }
        result
    }

    fn try_step3(&mut self, msg2: &PropMsg2) -> Result<PropMsg3, ProtocolError> {
        let r_c = self.params.validated(msg2.r_c.clone()).ok_or(ProtocolError::InvalidElement)?;
        let key1 = self.params.dh_key(&r_c, &self.a).map_err(|_| ProtocolError::InvalidElement)?;
        let expected = step2_tag(&self.params, &key1, &self.r_a, &self.x2_sent, &self.id_a, &self.id_b);
        if expected != msg2.tag {
            return Err(ProtocolError::TagMismatch);
        }
        let key2 = self.params.dh_key(&r_c, &self.b).map_err(|_| ProtocolError::InvalidElement)?;
        let tag = step3_tag(&self.params, &key1, &key2, &r_c, &self.id_a, &self.id_b);
        self.key1 = Some(key1);
        self.key2 = Some(key2);
        self.phase = AlicePhase::Done;
        Ok(PropMsg3 { tag })
    }

    pub fn phase(&self) -> AlicePhase {
        self.phase
    }

    pub fn key1(&self) -> Option<&SharedKey> {
        self.key1.as_ref()
    }

    pub fn key2(&self) -> Option<&SharedKey> {
        self.key2.as_ref()
    }

    pub fn r_a(&self) -> &GroupElement {
        &self.r_a
    }

    pub fn r_b(&self) -> &GroupElement {
        &self.r_b
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
pub struct PropBob {
    params: GroupParams,
    stored_pw: Password,
    c: Exponent,
    r_a: GroupElement,
    r_c: GroupElement,
    key1: SharedKey,
    key2: Option<SharedKey>,
    x2_held: MaskedBytes,
    id_a: Identity,
    id_b: Identity,
    recovered_new_pw: Option<Password>,
    iterations_used: usize,
    phase: BobPhase,
}

impl PropBob {
    /// Step 2. `x2` is kept unopened for Step 4.
    pub fn step2(params: &GroupParams, stored_pw: Password, msg1: &PropMsg1, c: Exponent, id_a: Identity, id_b: Identity) -> Result<(Self, PropMsg2), ProtocolError> {
        let n = params.byte_len();
        if msg1.x1.len() != n || msg1.x2.len() != n {
            return Err(ProtocolError::Malformed(codec::CodecError::Width { expected: n, got: msg1.x1.len().max(msg1.x2.len()) }));
        }
        let ra_bytes = mask(msg1.x1.as_bytes(), &stored_pw);
        let r_a = decode_element(ra_bytes.as_bytes(), params).map_err(|_| ProtocolError::OutOfRange)?;
        let r_a = params.validated(r_a).ok_or(ProtocolError::SubgroupFail)?;

        let r_c = params.public(&c);
        let key1 = params.dh_key(&r_a, &c).map_err(|_| ProtocolError::InvalidElement)?;
        let tag = step2_tag(params, &key1, &r_a, &msg1.x2, &id_a, &id_b);
        let msg = PropMsg2 { r_c: r_c.clone(), tag };
        let state = Self {
            params: params.clone(),
            stored_pw,
            c,
            r_a,
            r_c,
            key1,
            key2: None,
            x2_held: msg1.x2.clone(),
            id_a,
            id_b,
            recovered_new_pw: None,
            iterations_used: 0,
            phase: BobPhase::Sent2,
        };
        Ok((state, msg))
    }

    /// Step 4: dictionary-order search for the candidate whose unmasked
    /// `R_B'` reproduces `msg3`. At most `max_iterations` candidates are
    /// tried; exhausting either bound rejects.
    pub fn step4(&mut self, msg3: &PropMsg3, dictionary: &[Password], max_iterations: usize) -> BobPhase {
        if self.phase != BobPhase::Sent2 {
            return self.phase;
        }
        for candidate in dictionary.iter().take(max_iterations) {
            self.iterations_used += 1;
            if let Some(key2) = self.try_candidate(candidate, &msg3.tag) {
                self.stored_pw = candidate.clone();
                self.recovered_new_pw = Some(candidate.clone());
                self.key2 = Some(key2);
                self.phase = BobPhase::Accepted;
                return self.phase;
            }
        }
        self.phase = BobPhase::Rejected;
        self.phase
    }

    fn try_candidate(&self, candidate: &Password, tag: &Digest) -> Option<SharedKey> {
        let rb_bytes = mask(self.x2_held.as_bytes(), candidate);
        let r_b = decode_element(rb_bytes.as_bytes(), &self.params).ok()?;
        let r_b = self.params.validated(r_b)?;
        let key2 = self.params.dh_key(&r_b, &self.c).ok()?;
        (step3_tag(&self.params, &self.key1, &key2, &self.r_c, &self.id_a, &self.id_b) == *tag).then_some(key2)
    }

    pub fn phase(&self) -> BobPhase {
        self.phase
    }

    pub fn stored_pw(&self) -> &Password {
        &self.stored_pw
    }

    pub fn recovered_new_pw(&self) -> Option<&Password> {
        self.recovered_new_pw.as_ref()
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    pub fn key1(&self) -> &SharedKey {
        &self.key1
    }

    /// `Key_2'` of the accepted candidate.
    pub fn key2(&self) -> Option<&SharedKey> {
        self.key2.as_ref()
    }

    pub fn r_a(&self) -> &GroupElement {
        &self.r_a
    }

    pub fn r_c(&self) -> &GroupElement {
        &self.r_c
    }

    pub fn id_a(&self) -> &Identity {
        &self.id_a
    }

    pub fn id_b(&self) -> &Identity {
        &self.id_b
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

    fn ids() -> (Identity, Identity) {
        (Identity::new(*b"alice").unwrap(), Identity::new(*b"bob").unwrap())
    }

    fn dictionary() -> Vec<Password> {
        (0x01..=0x10).map(pw).collect()
    }

    fn start(p: &GroupParams) -> (PropAlice, PropBob, PropMsg1, PropMsg2) {
        let (id_a, id_b) = ids();
        let e = |v| p.exponent_u64(v).unwrap();
        let (alice, m1) = PropAlice::step1(p, pw(0x07), pw(0x0b), e(3), e(7), id_a.clone(), id_b.clone());
        let (bob, m2) = PropBob::step2(p, pw(0x07), &m1, e(5), id_a, id_b).unwrap();
        (alice, bob, m1, m2)
    }

    fn big(v: u32) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn step1_masks_two_elements() {
        let p = tiny();
        let (alice, _, m1, _) = start(&p);
        assert_eq!(alice.r_a().value(), &big(18));
        assert_eq!(alice.r_b().value(), &big(8));
        assert_eq!(m1.x1.as_bytes(), &[0x15]);
        assert_eq!(m1.x2.as_bytes(), &[0x03]);

        let (id_a, id_b) = ids();
        let e = |v| p.exponent_u64(v).unwrap();
        let (_, m1) = PropAlice::step1(&p, pw(0x07), pw(0x07), e(3), e(7), id_a, id_b);
        assert_ne!(m1.x1, m1.x2);
    }

    #[test]
    fn step2_keys_and_tag() {
        let p = tiny();
        let (_, bob, m1, m2) = start(&p);
        assert_eq!(m2.r_c.value(), &big(12));
        assert_eq!(bob.key1().value(), &big(3));
        let (id_a, id_b) = ids();
        assert_eq!(m2.tag, step2_tag(&p, bob.key1(), bob.r_a(), &m1.x2, &id_a, &id_b));
    }

    #[test]
    fn step2_wrong_password_rate_matches_enumeration() {
        // Every one-byte stored password other than the right one: the
        // unmasking either leaves [1, 22], or lands outside the subgroup,
        // or lands on another subgroup element.
        let p = tiny();
        let (_, _, m1, _) = start(&p);
        let (id_a, id_b) = ids();
        let (mut out_of_range, mut subgroup, mut accepted) = (0, 0, 0);
        for guess in 0u8..=255 {
            let r = PropBob::step2(&p, pw(guess), &m1, p.exponent_u64(5).unwrap(), id_a.clone(), id_b.clone());
            match r {
                Err(ProtocolError::OutOfRange) => out_of_range += 1,
                Err(ProtocolError::SubgroupFail) => subgroup += 1,
                Ok(_) => accepted += 1,
                Err(e) => panic!("{e}"),
            }
        }
        // 0x15 ^ g lands in [1, 22] for 22 guesses: 11 subgroup members
        // (one of them the identity, refused) and 11 others.
        assert_eq!((out_of_range, subgroup, accepted), (234, 12, 10));
    }

    #[test]
    fn replayed_x1_is_processed() {
        let p = tiny();
        let (id_a, id_b) = ids();
        let m1 = PropMsg1 { x1: MaskedBytes::from_vec(vec![0x15]), x2: MaskedBytes::from_vec(vec![0x15]) };
        assert!(PropBob::step2(&p, pw(0x07), &m1, p.exponent_u64(5).unwrap(), id_a, id_b).is_ok());
    }

    #[test]
    fn step3_keys() {
        let p = tiny();
        let (mut alice, _, _, m2) = start(&p);
        let m3 = alice.step3(&m2).unwrap();
        assert_eq!(alice.phase(), AlicePhase::Done);
        assert_eq!(alice.key1().unwrap().value(), &big(3));
        assert_eq!(alice.key2().unwrap().value(), &big(16));
        let (id_a, id_b) = ids();
        assert_eq!(m3.tag, step3_tag(&p, alice.key1().unwrap(), alice.key2().unwrap(), &m2.r_c, &id_a, &id_b));
    }

    #[test]
    fn step3_aborts_on_bad_msg2() {
        let p = tiny();
        let (mut alice, _, _, m2) = start(&p);
        let mut bytes = m2.to_bytes(&p);
        bytes[5] ^= 1;
        assert_eq!(alice.step3(&PropMsg2::from_bytes(&bytes, &p).unwrap()), Err(ProtocolError::TagMismatch));
        assert_eq!(alice.phase(), AlicePhase::Aborted);
        assert!(alice.key2().is_none());

        let (mut alice, _, _, mut m2) = start(&p);
        m2.r_c = p.element(1u32.into()).unwrap();
        assert_eq!(alice.step3(&m2), Err(ProtocolError::InvalidElement));
        assert_eq!(alice.phase(), AlicePhase::Aborted);

        let (mut alice, _, _, mut m2) = start(&p);
        m2.r_c = p.element(22u32.into()).unwrap();
        assert_eq!(alice.step3(&m2), Err(ProtocolError::InvalidElement));
    }

    #[test]
    fn step4_finds_new_password_in_dictionary_order() {
        let p = tiny();
        let (mut alice, mut bob, _, m2) = start(&p);
        let m3 = alice.step3(&m2).unwrap();
        assert_eq!(bob.step4(&m3, &dictionary(), DEFAULT_MAX_ITERATIONS), BobPhase::Accepted);
        assert_eq!(bob.recovered_new_pw(), Some(&pw(0x0b)));
        assert_eq!(bob.stored_pw(), &pw(0x0b));
        assert_eq!(bob.iterations_used(), 11);
        assert_eq!(bob.key2().unwrap().value(), &big(16));
        assert_eq!(bob.key2(), alice.key2());
    }

    #[test]
    fn step4_rejects_random_tag_and_missing_candidate() {
        let p = tiny();
        let (mut alice, bob, _, m2) = start(&p);
        let m3 = alice.step3(&m2).unwrap();

        let mut b = bob.clone();
        let forged = PropMsg3 { tag: Digest::from_bytes(&[0x5a; 32]).unwrap() };
        assert_eq!(b.step4(&forged, &dictionary(), DEFAULT_MAX_ITERATIONS), BobPhase::Rejected);
        assert_eq!(b.iterations_used(), 16);
        assert_eq!(b.stored_pw(), &pw(0x07));

        let mut b = bob.clone();
        let without: Vec<Password> = dictionary().into_iter().filter(|c| *c != pw(0x0b)).collect();
        assert_eq!(b.step4(&m3, &without, DEFAULT_MAX_ITERATIONS), BobPhase::Rejected);

        let mut b = bob;
        assert_eq!(b.step4(&m3, &dictionary(), 5), BobPhase::Rejected);
        assert_eq!(b.iterations_used(), 5);
    }

    #[test]
    fn wire_roundtrip() {
        let p = tiny();
        let (mut alice, _, m1, m2) = start(&p);
        let m3 = alice.step3(&m2).unwrap();
        assert_eq!(PropMsg1::from_bytes(&m1.to_bytes(), &p).unwrap(), m1);
        assert_eq!(PropMsg2::from_bytes(&m2.to_bytes(&p), &p).unwrap(), m2);
        assert_eq!(PropMsg3::from_bytes(&m3.to_bytes()).unwrap(), m3);
    }
}
