//! In-process Dolev-Yao channel: every message passes through the attacker,
//! who may deliver, modify, drop or inject according to a [`TamperPlan`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::chang::{self, ChangAlice, ChangBob, ChangMsg1, ChangMsg2, ChangMsg3};
use crate::codec::{Identity, Password};
use crate::dictionary::Dictionary;
use crate::error::ProtocolError;
use crate::group::{Exponent, GroupParams, SharedKey};
use crate::proposed::{self, PropAlice, PropBob, PropMsg1, PropMsg2, PropMsg3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Chang,
    Proposed,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Chang => "chang",
            Protocol::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chang" => Ok(Protocol::Chang),
            "proposed" => Ok(Protocol::Proposed),
            _ => Err(format!("unknown protocol `{s}` (expected chang or proposed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    AtoB,
    BtoA,
}

impl Direction {
    /// Direction of message `seq` in both three-message protocols.
    pub fn of_seq(seq: u32) -> Direction {
        if seq % 2 == 1 {
            Direction::AtoB
        } else {
            Direction::BtoA
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::AtoB => "A->B",
            Direction::BtoA => "B->A",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A->B" => Ok(Direction::AtoB),
            "B->A" => Ok(Direction::BtoA),
            _ => Err(format!("unknown direction `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Delivered,
    Modified,
    Dropped,
    Injected,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Delivered => "delivered",
            Action::Modified => "modified",
            Action::Dropped => "dropped",
            Action::Injected => "injected",
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delivered" => Ok(Action::Delivered),
            "modified" => Ok(Action::Modified),
            "dropped" => Ok(Action::Dropped),
            "injected" => Ok(Action::Injected),
            _ => Err(format!("unknown action `{s}`")),
        }
    }
}

/// One thing that happened on the wire. For `Dropped` the payload is what
/// the attacker swallowed; `Modified` also carries the pre-tamper bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelEvent {
    pub seq: u32,
    pub direction: Direction,
    pub action: Action,
    pub payload: Vec<u8>,
    pub original: Option<Vec<u8>>,
}

/// What the attacker does to one message slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tamper {
    Drop,
    /// XOR `bytes` into the payload starting at `offset`.
    Xor { offset: usize, bytes: Vec<u8> },
    /// Flip bit `bit` counted from the most significant bit of byte 0.
    FlipBit(usize),
    Replace(Vec<u8>),
    /// Deliver `bytes` if the honest sender stayed silent in this slot;
    /// an honest message passes through untouched.
    Inject(Vec<u8>),
}

impl Tamper {
    fn apply(&self, payload: &[u8]) -> Vec<u8> {
        let mut out = payload.to_vec();
        match self {
            Tamper::Xor { offset, bytes } => {
                for (o, b) in out.iter_mut().skip(*offset).zip(bytes) {
                    *o ^= b;
                }
            }
            Tamper::FlipBit(bit) => {
                if let Some(byte) = out.get_mut(bit / 8) {
                    *byte ^= 0x80 >> (bit % 8);
                }
            }
            Tamper::Replace(bytes) => out = bytes.clone(),
            Tamper::Drop | Tamper::Inject(_) => {}
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TamperPlan(BTreeMap<(u32, Direction), Tamper>);

impl TamperPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the action for message `seq`, travelling in its natural direction.
    pub fn with(mut self, seq: u32, tamper: Tamper) -> Self {
        self.0.insert((seq, Direction::of_seq(seq)), tamper);
        self
    }

    pub fn insert(&mut self, seq: u32, direction: Direction, tamper: Tamper) {
        self.0.insert((seq, direction), tamper);
    }

    pub fn get(&self, seq: u32, direction: Direction) -> Option<&Tamper> {
        self.0.get(&(seq, direction))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, Direction), &Tamper)> {
        self.0.iter()
    }
}

/// The attacker's view of one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub protocol: Protocol,
    pub params: GroupParams,
    pub id_a: Identity,
    pub id_b: Identity,
    pub events: Vec<ChannelEvent>,
}

impl Transcript {
    /// Bytes the honest sender put on the wire for message `seq`.
    pub fn sent(&self, seq: u32) -> Option<&[u8]> {
        self.events.iter().filter(|e| e.seq == seq).find_map(|e| match e.action {
            Action::Delivered | Action::Dropped => Some(e.payload.as_slice()),
            Action::Modified => e.original.as_deref(),
            Action::Injected => None,
        })
    }

    /// Bytes the recipient actually got for message `seq`.
    pub fn received(&self, seq: u32) -> Option<&[u8]> {
        self.events.iter().rev().filter(|e| e.seq == seq).find_map(|e| match e.action {
            Action::Delivered | Action::Modified | Action::Injected => Some(e.payload.as_slice()),
            Action::Dropped => None,
        })
    }
}

/// Unified terminal phase of either party in either protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Sent1,
    Sent2,
    Done,
    Aborted,
    Accepted,
    Rejected,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Sent1 => "sent1",
            Phase::Sent2 => "sent2",
            Phase::Done => "done",
            Phase::Aborted => "aborted",
            Phase::Accepted => "accepted",
            Phase::Rejected => "rejected",
        }
    }
}

impl From<chang::AlicePhase> for Phase {
    fn from(p: chang::AlicePhase) -> Self {
        match p {
            chang::AlicePhase::Init => Phase::Init,
            chang::AlicePhase::Sent1 => Phase::Sent1,
            chang::AlicePhase::Done => Phase::Done,
        }
    }
}

impl From<chang::BobPhase> for Phase {
    fn from(p: chang::BobPhase) -> Self {
        match p {
            chang::BobPhase::Init => Phase::Init,
            chang::BobPhase::Sent2 => Phase::Sent2,
            chang::BobPhase::Accepted => Phase::Accepted,
            chang::BobPhase::Rejected => Phase::Rejected,
        }
    }
}

impl From<proposed::AlicePhase> for Phase {
    fn from(p: proposed::AlicePhase) -> Self {
        match p {
            proposed::AlicePhase::Init => Phase::Init,
            proposed::AlicePhase::Sent1 => Phase::Sent1,
            proposed::AlicePhase::Done => Phase::Done,
            proposed::AlicePhase::Aborted => Phase::Aborted,
        }
    }
}

impl From<proposed::BobPhase> for Phase {
    fn from(p: proposed::BobPhase) -> Self {
        match p {
            proposed::BobPhase::Init => Phase::Init,
            proposed::BobPhase::Sent2 => Phase::Sent2,
            proposed::BobPhase::Accepted => Phase::Accepted,
            proposed::BobPhase::Rejected => Phase::Rejected,
        }
    }
}

/// How the session ended from Bob's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Accepted,
    Rejected,
    /// Bob never reached a verdict (a message was dropped or withheld).
    Incomplete,
}

impl Terminal {
    pub fn name(self) -> &'static str {
        match self {
            Terminal::Accepted => "accepted",
            Terminal::Rejected => "rejected",
            Terminal::Incomplete => "incomplete",
        }
    }
}

/// Inputs for both honest parties of one session.
#[derive(Debug, Clone)]
pub struct Parties {
    pub params: GroupParams,
    pub pw: Password,
    pub new_pw: Password,
    /// Bob's stored secret; equal to `pw` unless a test says otherwise.
    pub bob_pw: Password,
    pub id_a: Identity,
    pub id_b: Identity,
    /// Alice's exponent.
    pub a: Exponent,
    /// Bob's exponent in the three-message protocol, Alice's second one in
    /// the replacement.
    pub b: Exponent,
    /// Bob's exponent in the replacement.
    pub c: Exponent,
    /// Bob's candidate list for the replacement's last step.
    pub dictionary: Dictionary,
    pub max_iterations: usize,
}

impl Parties {
    /// Draws `a`, `b`, `c` in that order from a ChaCha20 stream seeded with
    /// `seed`. Identities default to `alice` and `bob`.
    pub fn seeded(params: &GroupParams, pw: Password, new_pw: Password, seed: u64, dictionary: Dictionary) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = params.random_exponent(&mut rng);
        let b = params.random_exponent(&mut rng);
        let c = params.random_exponent(&mut rng);
        Self::with_exponents(params, pw, new_pw, [a, b, c], dictionary)
    }

    pub fn with_exponents(params: &GroupParams, pw: Password, new_pw: Password, [a, b, c]: [Exponent; 3], dictionary: Dictionary) -> Self {
        Self {
            params: params.clone(),
            bob_pw: pw.clone(),
            pw,
            new_pw,
            id_a: Identity::new(*b"alice").expect("static identity"),
            id_b: Identity::new(*b"bob").expect("static identity"),
            a,
            b,
            c,
            dictionary,
            max_iterations: proposed::DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AliceEnd {
    pub phase: Phase,
    pub error: Option<ProtocolError>,
    /// `K_A`, or `Key_1`.
    pub key1: Option<SharedKey>,
    /// `Key_2`; never set in the three-message protocol.
    pub key2: Option<SharedKey>,
}

#[derive(Debug, Clone)]
pub struct BobEnd {
    pub phase: Phase,
    pub error: Option<ProtocolError>,
    pub stored_pw: Password,
    pub key1: Option<SharedKey>,
    pub key2: Option<SharedKey>,
    /// Password Bob extracted or searched out, if he got that far.
    pub recovered_new_pw: Option<Password>,
    pub iterations_used: usize,
}

/// Ground truth after a session: what each party ended up holding.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub alice: AliceEnd,
    pub bob: BobEnd,
    pub pw: Password,
    pub new_pw: Password,
    pub terminal: Terminal,
}

#[derive(Debug, Clone)]
pub struct SessionRun {
    pub transcript: Transcript,
    pub outcome: Outcome,
}

struct Wire<'a> {
    plan: &'a TamperPlan,
    events: Vec<ChannelEvent>,
}

impl Wire<'_> {
    fn transmit(&mut self, seq: u32, honest: Option<Vec<u8>>) -> Option<Vec<u8>> {
        let direction = Direction::of_seq(seq);
        let mut record = |action, payload: &[u8], original: Option<Vec<u8>>| {
            self.events.push(ChannelEvent { seq, direction, action, payload: payload.to_vec(), original });
        };
        match (self.plan.get(seq, direction), honest) {
            (None, Some(m)) | (Some(Tamper::Inject(_)), Some(m)) => {
                record(Action::Delivered, &m, None);
                Some(m)
            }
            (Some(Tamper::Inject(forged)), None) => {
                record(Action::Injected, forged, None);
                Some(forged.clone())
            }
            (Some(Tamper::Drop), Some(m)) => {
                record(Action::Dropped, &m, None);
                None
            }
            (Some(t), Some(m)) => {
                let out = t.apply(&m);
                if out == m {
                    record(Action::Delivered, &m, None);
                } else {
                    record(Action::Modified, &out, Some(m));
                }
                Some(out)
            }
            (_, None) => None,
        }
    }
}

/// Runs one session of `protocol` between honest `parties` through an
/// attacker following `plan`. Deterministic in its inputs.
pub fn mitm_channel(protocol: Protocol, parties: &Parties, plan: &TamperPlan) -> SessionRun {
    let mut wire = Wire { plan, events: Vec::new() };
    let outcome = match protocol {
        Protocol::Chang => run_chang(parties, &mut wire),
        Protocol::Proposed => run_proposed(parties, &mut wire),
    };
    let transcript = Transcript {
        protocol,
        params: parties.params.clone(),
        id_a: parties.id_a.clone(),
        id_b: parties.id_b.clone(),
        events: wire.events,
    };
    SessionRun { transcript, outcome }
}

fn terminal_of(bob: Phase) -> Terminal {
    match bob {
        Phase::Accepted => Terminal::Accepted,
        Phase::Rejected => Terminal::Rejected,
        _ => Terminal::Incomplete,
    }
}

fn run_chang(parties: &Parties, wire: &mut Wire<'_>) -> Outcome {
    let params = &parties.params;
    let (mut alice, m1) = ChangAlice::step1(params, parties.pw.clone(), parties.new_pw.clone(), parties.a.clone());
    let mut alice_error = None;
    let mut bob_end = BobEnd {
        phase: Phase::Init,
        error: None,
        stored_pw: parties.bob_pw.clone(),
        key1: None,
        key2: None,
        recovered_new_pw: None,
        iterations_used: 0,
    };

    let mut bob: Option<ChangBob> = None;
    let mut reply = None;
    if let Some(bytes) = wire.transmit(1, Some(m1.to_bytes())) {
        match ChangMsg1::from_bytes(&bytes, params).and_then(|m| ChangBob::step2(params, parties.bob_pw.clone(), &m, parties.b.clone())) {
            Ok((state, m2)) => {
                reply = Some(m2.to_bytes(params));
                bob = Some(state);
            }
            Err(e) => {
                bob_end.phase = Phase::Rejected;
                bob_end.error = Some(e);
            }
        }
    }

    let mut confirm = None;
    if let Some(bytes) = wire.transmit(2, reply) {
        match ChangMsg2::from_bytes(&bytes, params).and_then(|m| alice.step3(&m)) {
            Ok(m3) => confirm = Some(m3.to_bytes()),
            Err(e) => alice_error = Some(e),
        }
    }

    let delivered = wire.transmit(3, confirm);
    if let Some(mut state) = bob {
        if let Some(bytes) = delivered {
            match ChangMsg3::from_bytes(&bytes) {
                Ok(m3) => {
                    state.finish(&m3);
                }
                Err(e) => bob_end.error = Some(e),
            }
        }
        // A malformed final message is a rejection like any other.
        bob_end.phase = match (state.phase(), &bob_end.error) {
            (chang::BobPhase::Sent2, Some(_)) => Phase::Rejected,
            (p, _) => p.into(),
        };
        bob_end.stored_pw = state.stored_pw().clone();
        bob_end.key1 = Some(state.key().clone());
        bob_end.recovered_new_pw = Some(state.new_pw_recovered().clone());
    }

    Outcome {
        alice: AliceEnd { phase: alice.phase().into(), error: alice_error, key1: alice.key().cloned(), key2: None },
        terminal: terminal_of(bob_end.phase),
        bob: bob_end,
        pw: parties.pw.clone(),
        new_pw: parties.new_pw.clone(),
    }
}

fn run_proposed(parties: &Parties, wire: &mut Wire<'_>) -> Outcome {
    let params = &parties.params;
    let (mut alice, m1) = PropAlice::step1(
        params,
        parties.pw.clone(),
        parties.new_pw.clone(),
        parties.a.clone(),
        parties.b.clone(),
        parties.id_a.clone(),
        parties.id_b.clone(),
    );
    let mut alice_error = None;
    let mut bob_end = BobEnd {
        phase: Phase::Init,
        error: None,
        stored_pw: parties.bob_pw.clone(),
        key1: None,
        key2: None,
        recovered_new_pw: None,
        iterations_used: 0,
    };

    let mut bob: Option<PropBob> = None;
    let mut reply = None;
    if let Some(bytes) = wire.transmit(1, Some(m1.to_bytes())) {
        let step2 = PropMsg1::from_bytes(&bytes, params).and_then(|m| {
            PropBob::step2(params, parties.bob_pw.clone(), &m, parties.c.clone(), parties.id_a.clone(), parties.id_b.clone())
        });
        match step2 {
            Ok((state, m2)) => {
                reply = Some(m2.to_bytes(params));
                bob = Some(state);
            }
            Err(e) => {
                bob_end.phase = Phase::Rejected;
                bob_end.error = Some(e);
            }
        }
    }

    let mut confirm = None;
    if let Some(bytes) = wire.transmit(2, reply) {
        let step3 = PropMsg2::from_bytes(&bytes, params).and_then(|m| alice.step3(&m));
        match step3 {
            Ok(m3) => confirm = Some(m3.to_bytes()),
            Err(e) => alice_error = Some(e),
        }
    }
    // A msg2 that fails to parse never reached step3, but Alice still gives up.
    let alice_phase = match (alice.phase(), &alice_error) {
        (proposed::AlicePhase::Sent1, Some(_)) => Phase::Aborted,
        (p, _) => p.into(),
    };

    let delivered = wire.transmit(3, confirm);
    if let Some(mut state) = bob {
        if let Some(bytes) = delivered {
            match PropMsg3::from_bytes(&bytes) {
                Ok(m3) => {
                    state.step4(&m3, &parties.dictionary, parties.max_iterations);
                }
                Err(e) => bob_end.error = Some(e),
            }
        }
        bob_end.phase = match (state.phase(), &bob_end.error) {
            (proposed::BobPhase::Sent2, Some(_)) => Phase::Rejected,
            (p, _) => p.into(),
        };
        bob_end.stored_pw = state.stored_pw().clone();
        bob_end.key1 = Some(state.key1().clone());
        bob_end.key2 = state.key2().cloned();
        bob_end.recovered_new_pw = state.recovered_new_pw().cloned();
        bob_end.iterations_used = state.iterations_used();
    }

    Outcome {
        alice: AliceEnd { phase: alice_phase, error: alice_error, key1: alice.key1().cloned(), key2: alice.key2().cloned() },
        terminal: terminal_of(bob_end.phase),
        bob: bob_end,
        pw: parties.pw.clone(),
        new_pw: parties.new_pw.clone(),
    }
}
