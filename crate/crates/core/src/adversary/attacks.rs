//! Offline guessing, denial of service and known-key attacks.
//!
//! Attacker code sees only a [`Transcript`] plus whatever it was explicitly
//! handed (a dictionary, compromised keys). Its toolkit is XOR, element
//! encode/decode, `H`, exponentiation with exponents it knows, and
//! equality. Success is never self-reported: each `judge_*` function
//! compares the attacker's output against the session's [`Outcome`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::channel::{mitm_channel, Outcome, Parties, Phase, Protocol, SessionRun, Tamper, TamperPlan, Transcript};
use crate::chang::{key_tag, ChangMsg1, ChangMsg2, ChangMsg3};
use crate::codec::{decode_element, fit, mask, xor, Password, DIGEST_LEN};
use crate::error::ProtocolError;
use crate::group::{GroupElement, GroupParams, SharedKey};
use crate::proposed::{step2_tag, step3_tag, PropMsg1, PropMsg2, PropMsg3};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("transcript has no message {0}")]
    MissingMessage(u32),
    #[error("message {seq} does not parse: {source}")]
    BadMessage { seq: u32, source: ProtocolError },
    #[error("{0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    OfflineGuess,
    DoS,
    KnownKey,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::OfflineGuess => "offline-guess",
            AttackKind::DoS => "dos",
            AttackKind::KnownKey => "known-key",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "offline-guess" => Ok(AttackKind::OfflineGuess),
            "dos" => Ok(AttackKind::DoS),
            "known-key" => Ok(AttackKind::KnownKey),
            _ => Err(format!("unknown attack `{s}` (expected offline-guess, dos or known-key)")),
        }
    }
}

/// Oracle result. `evidence` is ordered key/value detail for reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackVerdict {
    pub attack: AttackKind,
    pub target: Protocol,
    pub succeeded: bool,
    pub evidence: Vec<(&'static str, String)>,
}

impl AttackVerdict {
    pub fn evidence(&self, key: &str) -> Option<&str> {
        self.evidence.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }
}

fn message(t: &Transcript, seq: u32) -> Result<&[u8], AttackError> {
    t.sent(seq).ok_or(AttackError::MissingMessage(seq))
}

fn parse<T>(seq: u32, r: Result<T, ProtocolError>) -> Result<T, AttackError> {
    r.map_err(|source| AttackError::BadMessage { seq, source })
}

// ---------------------------------------------------------------------------
// Offline guessing

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuessOptions {
    /// Also require each unmasked element to pass the subgroup check.
    pub subgroup_filter: bool,
}

impl Default for GuessOptions {
    fn default() -> Self {
        Self { subgroup_filter: true }
    }
}

/// Surviving `(pw', new_pw')` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateSet {
    Explicit(Vec<(Password, Password)>),
    /// Every combination of the two lists survives.
    Product { pw: Vec<Password>, new_pw: Vec<Password> },
}

impl CandidateSet {
    pub fn len(&self) -> u64 {
        match self {
            CandidateSet::Explicit(v) => v.len() as u64,
            CandidateSet::Product { pw, new_pw } => pw.len() as u64 * new_pw.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, pw: &Password, new_pw: &Password) -> bool {
        match self {
            CandidateSet::Explicit(v) => v.iter().any(|(a, b)| a == pw && b == new_pw),
            CandidateSet::Product { pw: a, new_pw: b } => a.contains(pw) && b.contains(new_pw),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuessReport {
    pub target: Protocol,
    pub candidates: CandidateSet,
    pub dictionary_size: usize,
    /// `dictionary_size^2`.
    pub total_pairs: u64,
    /// Pairs whose two unmaskings both pass the validity filters.
    pub baseline_pairs: u64,
    pub filters_applied: Vec<&'static str>,
}

impl GuessReport {
    /// Survivors over all ordered pairs.
    pub fn reduction_ratio(&self) -> f64 {
        ratio(self.candidates.len(), self.total_pairs)
    }

    /// Survivors over the validity baseline.
    pub fn ratio_vs_baseline(&self) -> f64 {
        ratio(self.candidates.len(), self.baseline_pairs)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Unmasks `masked` under every candidate; `None` where the result fails
/// the validity filters.
fn unmask_all(params: &GroupParams, masked: &[u8], dictionary: &[Password], opts: GuessOptions) -> Vec<Option<Vec<u8>>> {
    dictionary
        .iter()
        .map(|cand| {
            let bytes = mask(masked, cand).as_bytes().to_vec();
            let element = decode_element(&bytes, params).ok()?;
            if opts.subgroup_filter && params.validated(element).is_none() {
                return None;
            }
            Some(bytes)
        })
        .collect()
}

/// Filters every ordered dictionary pair against the first message.
///
/// Against the three-message protocol both halves of msg1 mask the same
/// `R_A`, so a pair survives only if its two unmaskings agree. Against the
/// replacement the halves mask independent elements; equality would throw
/// away the true pair, so only the validity filters apply.
pub fn attack_offline_guess(t: &Transcript, dictionary: &[Password], opts: GuessOptions) -> Result<GuessReport, AttackError> {
    let params = &t.params;
    let raw = message(t, 1)?;
    let (x1, x2) = match t.protocol {
        Protocol::Chang => {
            let m = parse(1, ChangMsg1::from_bytes(raw, params))?;
            (m.x1, m.x2)
        }
        Protocol::Proposed => {
            let m = parse(1, PropMsg1::from_bytes(raw, params))?;
            (m.x1, m.x2)
        }
    };

    let first = unmask_all(params, x1.as_bytes(), dictionary, opts);
    let second = unmask_all(params, x2.as_bytes(), dictionary, opts);
    let valid = |v: &[Option<Vec<u8>>]| v.iter().filter(|x| x.is_some()).count() as u64;
    let baseline_pairs = valid(&first) * valid(&second);

    let mut filters_applied = vec!["decode"];
    if opts.subgroup_filter {
        filters_applied.push("subgroup");
    }

    let candidates = match t.protocol {
        Protocol::Chang => {
            filters_applied.push("equality");
            let mut by_value: HashMap<&[u8], Vec<usize>> = HashMap::new();
            for (j, u) in second.iter().enumerate() {
                if let Some(u) = u {
                    by_value.entry(u.as_slice()).or_default().push(j);
                }
            }
            let mut pairs = Vec::new();
            for (i, u) in first.iter().enumerate() {
                let Some(u) = u else { continue };
                for &j in by_value.get(u.as_slice()).into_iter().flatten() {
                    pairs.push((dictionary[i].clone(), dictionary[j].clone()));
                }
            }
            CandidateSet::Explicit(pairs)
        }
        Protocol::Proposed => {
            let keep = |v: &[Option<Vec<u8>>]| {
                v.iter().zip(dictionary).filter(|(u, _)| u.is_some()).map(|(_, p)| p.clone()).collect()
            };
            CandidateSet::Product { pw: keep(&first), new_pw: keep(&second) }
        }
    };

    Ok(GuessReport {
        target: t.protocol,
        candidates,
        dictionary_size: dictionary.len(),
        total_pairs: (dictionary.len() as u64).pow(2),
        baseline_pairs,
        filters_applied,
    })
}

/// Succeeds iff the true pair survived and the filters cut the set below
/// the validity baseline, i.e. the transcript leaked something.
pub fn judge_offline_guess(report: &GuessReport, truth: &Outcome) -> AttackVerdict {
    let present = report.candidates.contains(&truth.pw, &truth.new_pw);
    let reduced = report.candidates.len() < report.baseline_pairs;
    AttackVerdict {
        attack: AttackKind::OfflineGuess,
        target: report.target,
        succeeded: present && reduced,
        evidence: vec![
            ("true_pair_present", present.to_string()),
            ("candidates", report.candidates.len().to_string()),
            ("total_pairs", report.total_pairs.to_string()),
            ("baseline_pairs", report.baseline_pairs.to_string()),
            ("reduction_ratio", format!("{:.6}", report.reduction_ratio())),
            ("ratio_vs_baseline", format!("{:.6}", report.ratio_vs_baseline())),
            ("filters", report.filters_applied.join(",")),
        ],
    }
}

// ---------------------------------------------------------------------------
// Denial of service

/// Tamper plan for the desynchronisation attack with mask `c`
/// (`byte_len` bytes).
///
/// Against the three-message protocol `c` is XORed into `x2` and `fit(c, 32)`
/// into the masked tag, so Bob's unmasking of the tag cancels out. The
/// replacement's last message is a bare digest, so there is no matching
/// tamper: the attacker XORs `c` into `x2` and, once Alice refuses to
/// answer, injects `fit(c, 32)` as the final tag.
pub fn dos_plan(protocol: Protocol, params: &GroupParams, c: &[u8]) -> Result<TamperPlan, AttackError> {
    let n = params.byte_len();
    if c.len() != n {
        return Err(AttackError::BadParameter(format!("c must be {n} bytes, got {}", c.len())));
    }
    let xor_x2 = Tamper::Xor { offset: n, bytes: c.to_vec() };
    let third = match protocol {
        Protocol::Chang => Tamper::Xor { offset: 0, bytes: fit(c, DIGEST_LEN) },
        Protocol::Proposed => Tamper::Inject(fit(c, DIGEST_LEN)),
    };
    Ok(TamperPlan::new().with(1, xor_x2).with(3, third))
}

pub fn attack_dos(protocol: Protocol, parties: &Parties, c: &[u8]) -> Result<(SessionRun, AttackVerdict), AttackError> {
    let plan = dos_plan(protocol, &parties.params, c)?;
    let run = mitm_channel(protocol, parties, &plan);
    let verdict = judge_dos(protocol, &run.outcome, parties.params.byte_len());
    Ok((run, verdict))
}

/// Succeeds iff Bob accepted and now stores something other than Alice's
/// new password.
pub fn judge_dos(target: Protocol, truth: &Outcome, byte_len: usize) -> AttackVerdict {
    let accepted = truth.bob.phase == Phase::Accepted;
    let diverged = !truth.bob.stored_pw.fits_same(&truth.new_pw, byte_len);
    let divergence = xor(&fit(truth.bob.stored_pw.as_bytes(), byte_len), &fit(truth.new_pw.as_bytes(), byte_len));
    AttackVerdict {
        attack: AttackKind::DoS,
        target,
        succeeded: accepted && diverged,
        evidence: vec![
            ("alice_phase", truth.alice.phase.name().to_string()),
            ("bob_phase", truth.bob.phase.name().to_string()),
            ("bob_stored_pw", truth.bob.stored_pw.to_hex()),
            ("alice_new_pw", truth.new_pw.to_hex()),
            ("divergence", hex::encode(divergence)),
            ("iterations_used", truth.bob.iterations_used.to_string()),
        ],
    }
}

// ---------------------------------------------------------------------------
// Known key

/// Secrets the attacker learned from somewhere else.
#[derive(Debug, Clone, Default)]
pub struct Compromised {
    pub keys: Vec<SharedKey>,
    /// Old passwords (the second variant of the known-key attack).
    pub passwords: Vec<Password>,
}

impl Compromised {
    pub fn keys(keys: impl IntoIterator<Item = SharedKey>) -> Self {
        Self { keys: keys.into_iter().collect(), passwords: Vec::new() }
    }

    pub fn password(pw: Password) -> Self {
        Self { keys: Vec::new(), passwords: vec![pw] }
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty() && self.passwords.is_empty()
    }
}

/// What the attacker claims after a known-key attempt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnownKeyClaim {
    pub recovered_new_pw: Option<Password>,
    /// Old password confirmed against a transcript tag.
    pub recovered_old_pw: Option<Password>,
    /// Compromised keys reproduced the final tag.
    pub tag_verified: bool,
    /// New-password candidates for which some check could be evaluated.
    pub verifiable_candidates: usize,
}

pub fn known_key_claim(t: &Transcript, compromised: &Compromised, dictionary: &[Password]) -> Result<KnownKeyClaim, AttackError> {
    match t.protocol {
        Protocol::Chang => chang_known_key(t, compromised),
        Protocol::Proposed => proposed_known_key(t, compromised, dictionary),
    }
}

/// With `K` known, `new_pw = msg3 ^ H(K, R_B)`; the guess is confirmed by
/// re-deriving `R_A` from `x2` and checking `H(K, R_A)` from msg2. With the
/// old password known, `new_pw = x1 ^ x2 ^ pw`.
fn chang_known_key(t: &Transcript, compromised: &Compromised) -> Result<KnownKeyClaim, AttackError> {
    let params = &t.params;
    let n = params.byte_len();
    let m1 = parse(1, ChangMsg1::from_bytes(message(t, 1)?, params))?;
    let mut claim = KnownKeyClaim::default();

    for pw in &compromised.passwords {
        let ra = mask(m1.x1.as_bytes(), pw);
        if decode_element(ra.as_bytes(), params).ok().and_then(|e| params.validated(e)).is_some() {
            claim.recovered_old_pw = Some(pw.clone());
            claim.recovered_new_pw = Some(Password::recovered(&xor(ra.as_bytes(), m1.x2.as_bytes())));
            claim.verifiable_candidates += 1;
            return Ok(claim);
        }
    }

    if compromised.keys.is_empty() {
        return Ok(claim);
    }
    let m2 = parse(2, ChangMsg2::from_bytes(message(t, 2)?, params))?;
    let m3 = parse(3, ChangMsg3::from_bytes(message(t, 3)?))?;
    for key in &compromised.keys {
        let pad = key_tag(params, key, &m2.r_b);
        let new_pw = Password::recovered(&xor(m3.masked_tag.as_bytes(), pad.as_bytes()));
        claim.verifiable_candidates += 1;
        let ra_bytes = mask(m1.x2.as_bytes(), &Password::recovered(&fit(new_pw.as_bytes(), n)));
        let Ok(r_a) = decode_element(ra_bytes.as_bytes(), params) else { continue };
        if key_tag(params, key, &r_a) == m2.tag {
            claim.tag_verified = true;
            claim.recovered_new_pw = Some(new_pw);
            break;
        }
    }
    Ok(claim)
}

/// Everything the restricted attacker can evaluate against the
/// replacement's transcript:
///
/// * each ordered pair of known keys against the final tag;
/// * each known key as `Key_1` with each old-password candidate against
///   msg2's tag (the old password does fall to this);
/// * for each new-password candidate, `R_B'` standing in for `Key_2` in
///   the final tag.
///
/// Tying `R_B'` to `Key_2 = R_B^c` needs `b` or `c`, which it never has.
fn proposed_known_key(t: &Transcript, compromised: &Compromised, dictionary: &[Password]) -> Result<KnownKeyClaim, AttackError> {
    let params = &t.params;
    let m1 = parse(1, PropMsg1::from_bytes(message(t, 1)?, params))?;
    let mut claim = KnownKeyClaim::default();
    if compromised.is_empty() {
        return Ok(claim);
    }
    let m2 = parse(2, PropMsg2::from_bytes(message(t, 2)?, params))?;
    let m3 = t.sent(3).map(|raw| parse(3, PropMsg3::from_bytes(raw))).transpose()?;

    let keys = &compromised.keys;
    if let Some(m3) = &m3 {
        claim.tag_verified = keys
            .iter()
            .any(|k1| keys.iter().any(|k2| step3_tag(params, k1, k2, &m2.r_c, &t.id_a, &t.id_b) == m3.tag));
    }

    let unmask = |masked: &[u8], cand: &Password| -> Option<GroupElement> {
        decode_element(mask(masked, cand).as_bytes(), params).ok().and_then(|e| params.validated(e))
    };

    'old: for cand in compromised.passwords.iter().chain(dictionary) {
        let Some(r_a) = unmask(m1.x1.as_bytes(), cand) else { continue };
        for k1 in keys {
            if step2_tag(params, k1, &r_a, &m1.x2, &t.id_a, &t.id_b) == m2.tag {
                claim.recovered_old_pw = Some(cand.clone());
                break 'old;
            }
        }
    }

    // A hit here would need R_B' = Key_2, which happens for the true
    // candidate only if c = 1.
    if let Some(m3) = &m3 {
        for cand in dictionary {
            let Some(r_b) = unmask(m1.x2.as_bytes(), cand) else { continue };
            let as_key = SharedKey::from_element(r_b);
            if keys.iter().any(|k1| step3_tag(params, k1, &as_key, &m2.r_c, &t.id_a, &t.id_b) == m3.tag) {
                claim.verifiable_candidates += 1;
                claim.recovered_new_pw.get_or_insert_with(|| cand.clone());
            }
        }
    }
    Ok(claim)
}

/// Succeeds iff the claimed new password is the one Alice chose.
pub fn judge_known_key(target: Protocol, claim: &KnownKeyClaim, truth: &Outcome, byte_len: usize) -> AttackVerdict {
    let succeeded = claim.recovered_new_pw.as_ref().is_some_and(|p| p.fits_same(&truth.new_pw, byte_len));
    let show = |p: &Option<Password>| p.as_ref().map_or_else(|| "-".to_string(), Password::to_hex);
    AttackVerdict {
        attack: AttackKind::KnownKey,
        target,
        succeeded,
        evidence: vec![
            ("recovered_new_pw", show(&claim.recovered_new_pw)),
            ("recovered_old_pw", show(&claim.recovered_old_pw)),
            ("tag_verified", claim.tag_verified.to_string()),
            ("verifiable_candidates", claim.verifiable_candidates.to_string()),
            ("alice_new_pw", truth.new_pw.to_hex()),
        ],
    }
}

pub fn attack_known_key(run: &SessionRun, compromised: &Compromised, dictionary: &[Password]) -> Result<AttackVerdict, AttackError> {
    let claim = known_key_claim(&run.transcript, compromised, dictionary)?;
    Ok(judge_known_key(run.transcript.protocol, &claim, &run.outcome, run.transcript.params.byte_len()))
}
