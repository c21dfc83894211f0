//! Scenario files, the password store, transcripts and run reports.
//!
//! # Scenario format
//!
//! Flat `key=value` lines; `#` starts a comment line.
//!
//! | key            | value                                                      |
//! |----------------|------------------------------------------------------------|
//! | `name`         | scenario name, also the stem of emitted files              |
//! | `protocol`     | `chang` or `proposed`                                      |
//! | `preset`       | `tiny`, `desk` or `demo`                                   |
//! | `seed`         | u64; drives every exponent and any random attack input     |
//! | `pw`, `new_pw` | hex passwords                                              |
//! | `dictionary`   | path (relative to the scenario file) or `seq:W:START:N`    |
//! | `id_a`, `id_b` | optional identities, plain text (default `alice`, `bob`)  |
//! | `attack`       | optional: `offline-guess`, `dos`, `known-key`              |
//! | `c`            | dos: hex mask, `byte_len` bytes; random from seed if unset |
//! | `compromised`  | known-key: comma list of `key1`, `key2`, `pw`              |
//! | `subgroup_filter` | offline-guess: `true` (default) or `false`              |
//! | `tamper`       | `;`-separated plan entries, see [`parse_tamper_plan`]      |
//! | `expect`       | optional: `success` or `failure` of the attack             |

mod store;
mod transcript;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

pub use store::PasswordStore;
pub use transcript::{emit_transcript, parse_transcript, render_transcript, replay_messages, Message};

use crate::adversary::{
    attack_dos, attack_known_key, attack_offline_guess, judge_offline_guess, mitm_channel, AttackError, AttackKind, AttackVerdict,
    Compromised, GuessOptions, Parties, Protocol, SessionRun, Tamper, TamperPlan, Terminal,
};
use crate::codec::{Identity, Password};
use crate::dictionary::Dictionary;
use crate::presets::{Preset, PresetError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictionarySource {
    File(PathBuf),
    Sequential { width: usize, start: u64, count: usize },
}

impl DictionarySource {
    pub fn parse(value: &str, base: &Path) -> Result<Self, HarnessError> {
        if let Some(spec) = value.strip_prefix("seq:") {
            let parts: Vec<&str> = spec.split(':').collect();
            let bad = || HarnessError::Config(format!("bad dictionary generator `{value}` (want seq:WIDTH:START:COUNT)"));
            let [w, s, n] = parts[..] else { return Err(bad()) };
            let width: usize = w.parse().map_err(|_| bad())?;
            if !(1..=8).contains(&width) {
                return Err(bad());
            }
            return Ok(Self::Sequential { width, start: s.parse().map_err(|_| bad())?, count: n.parse().map_err(|_| bad())? });
        }
        Ok(Self::File(base.join(value)))
    }

    pub fn load(&self) -> Result<Dictionary, HarnessError> {
        match self {
            Self::File(path) => Ok(Dictionary::load(path)?),
            Self::Sequential { width, start, count } => Ok(Dictionary::sequential(*width, *start, *count)),
        }
    }
}

/// Which ground-truth secrets a known-key scenario leaks to the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leak {
    Key1,
    Key2,
    OldPassword,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackSpec {
    OfflineGuess { subgroup_filter: bool },
    DoS { c: Option<Vec<u8>> },
    KnownKey { leaks: Vec<Leak> },
}

impl AttackSpec {
    pub fn kind(&self) -> AttackKind {
        match self {
            AttackSpec::OfflineGuess { .. } => AttackKind::OfflineGuess,
            AttackSpec::DoS { .. } => AttackKind::DoS,
            AttackSpec::KnownKey { .. } => AttackKind::KnownKey,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub protocol: Protocol,
    pub preset: Preset,
    pub seed: u64,
    pub pw: Password,
    pub new_pw: Password,
    pub id_a: Identity,
    pub id_b: Identity,
    pub dictionary: Option<DictionarySource>,
    pub attack: Option<AttackSpec>,
    pub tamper_plan: TamperPlan,
    /// Expected attack success, if the scenario states one.
    pub expect_success: Option<bool>,
}

impl Scenario {
    pub fn new(name: &str, protocol: Protocol, preset: Preset, seed: u64, pw: Password, new_pw: Password) -> Self {
        Self {
            name: name.to_string(),
            protocol,
            preset,
            seed,
            pw,
            new_pw,
            id_a: Identity::new(*b"alice").expect("static identity"),
            id_b: Identity::new(*b"bob").expect("static identity"),
            dictionary: None,
            attack: None,
            tamper_plan: TamperPlan::new(),
            expect_success: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses scenario text; relative dictionary paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut kv = std::collections::BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", n + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(HarnessError::Config(format!("line {}: duplicate key `{}`", n + 1, k.trim())));
            }
        }
        let cfg = |e: String| HarnessError::Config(e);
        let mut take = |k: &str| kv.remove(k);
        let require = |k: &str, v: Option<String>| v.ok_or_else(|| cfg(format!("missing `{k}`")));
        let password = |k: &str, v: String| Password::from_hex(&v).map_err(|e| cfg(format!("`{k}`: {e}")));
        let identity = |k: &str, v: String| Identity::new(v.into_bytes()).map_err(|e| cfg(format!("`{k}`: {e}")));

        let name = require("name", take("name"))?;
        let protocol = require("protocol", take("protocol"))?.parse::<Protocol>().map_err(cfg)?;
        let preset = require("preset", take("preset"))?.parse::<Preset>()?;
        let seed = require("seed", take("seed"))?.parse::<u64>().map_err(|e| cfg(format!("`seed`: {e}")))?;
        let pw = password("pw", require("pw", take("pw"))?)?;
        let new_pw = password("new_pw", require("new_pw", take("new_pw"))?)?;
        let mut scenario = Scenario::new(&name, protocol, preset, seed, pw, new_pw);
        if let Some(v) = take("id_a") {
            scenario.id_a = identity("id_a", v)?;
        }
        if let Some(v) = take("id_b") {
            scenario.id_b = identity("id_b", v)?;
        }
        scenario.dictionary = take("dictionary").map(|v| DictionarySource::parse(&v, base)).transpose()?;
        if let Some(v) = take("tamper") {
            scenario.tamper_plan = parse_tamper_plan(&v)?;
        }

        let c = take("c");
        let compromised = take("compromised");
        let subgroup_filter = take("subgroup_filter");
        let attack = take("attack").map(|v| v.parse::<AttackKind>().map_err(cfg)).transpose()?;
        let stray = |k: &str, present: bool| if present { Err(cfg(format!("`{k}` does not apply to this attack"))) } else { Ok(()) };
        scenario.attack = match attack {
            None => {
                stray("c", c.is_some())?;
                stray("compromised", compromised.is_some())?;
                stray("subgroup_filter", subgroup_filter.is_some())?;
                None
            }
            Some(AttackKind::OfflineGuess) => {
                stray("c", c.is_some())?;
                stray("compromised", compromised.is_some())?;
                let subgroup_filter = match subgroup_filter.as_deref() {
                    None | Some("true") => true,
                    Some("false") => false,
                    Some(other) => return Err(cfg(format!("`subgroup_filter`: expected true/false, got `{other}`"))),
                };
                Some(AttackSpec::OfflineGuess { subgroup_filter })
            }
            Some(AttackKind::DoS) => {
                stray("compromised", compromised.is_some())?;
                stray("subgroup_filter", subgroup_filter.is_some())?;
                let c = c.map(|v| hex::decode(v).map_err(|e| cfg(format!("`c`: {e}")))).transpose()?;
                Some(AttackSpec::DoS { c })
            }
            Some(AttackKind::KnownKey) => {
                stray("c", c.is_some())?;
                stray("subgroup_filter", subgroup_filter.is_some())?;
                let leaks = parse_leaks(compromised.as_deref().unwrap_or(""))?;
                Some(AttackSpec::KnownKey { leaks })
            }
        };
        if scenario.attack.is_some() && !scenario.tamper_plan.is_empty() {
            return Err(cfg("`tamper` cannot be combined with `attack`".into()));
        }
        scenario.expect_success = match take("expect").as_deref() {
            None => None,
            Some("success") => Some(true),
            Some("failure") => Some(false),
            Some(other) => return Err(cfg(format!("`expect`: expected success/failure, got `{other}`"))),
        };
        if scenario.expect_success.is_some() && scenario.attack.is_none() {
            return Err(cfg("`expect` needs an `attack`".into()));
        }
        if let Some(k) = kv.keys().next() {
            return Err(cfg(format!("unknown key `{k}`")));
        }
        Ok(scenario)
    }

    fn needs_dictionary(&self) -> bool {
        self.protocol == Protocol::Proposed || matches!(self.attack, Some(AttackSpec::OfflineGuess { .. }))
    }
}

impl std::str::FromStr for Leak {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s.trim() {
            "key1" => Ok(Leak::Key1),
            "key2" => Ok(Leak::Key2),
            "pw" => Ok(Leak::OldPassword),
            other => Err(HarnessError::Config(format!("unknown leak `{other}` (want key1, key2 or pw)"))),
        }
    }
}

/// Parses a comma list of leaks such as `key1,pw`.
pub fn parse_leaks(s: &str) -> Result<Vec<Leak>, HarnessError> {
    s.split(',').filter(|l| !l.trim().is_empty()).map(str::parse).collect()
}

/// Parses `SEQ:ACTION[:ARGS]` entries separated by `;`:
/// `2:drop`, `1:xor:OFFSET:HEX`, `3:flip:BIT`, `1:replace:HEX`,
/// `3:inject:HEX`.
pub fn parse_tamper_plan(text: &str) -> Result<TamperPlan, HarnessError> {
    let mut plan = TamperPlan::new();
    for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let bad = || HarnessError::Config(format!("bad tamper entry `{entry}`"));
        let parts: Vec<&str> = entry.split(':').collect();
        let seq: u32 = parts.first().and_then(|s| s.parse().ok()).filter(|s| (1..=3).contains(s)).ok_or_else(bad)?;
        let bytes = |s: &str| hex::decode(s).map_err(|_| bad());
        let tamper = match parts[1..] {
            ["drop"] => Tamper::Drop,
            ["xor", offset, mask] => Tamper::Xor { offset: offset.parse().map_err(|_| bad())?, bytes: bytes(mask)? },
            ["flip", bit] => Tamper::FlipBit(bit.parse().map_err(|_| bad())?),
            ["replace", b] => Tamper::Replace(bytes(b)?),
            ["inject", b] => Tamper::Inject(bytes(b)?),
            _ => return Err(bad()),
        };
        plan = plan.with(seq, tamper);
    }
    Ok(plan)
}

/// Inverse of [`parse_tamper_plan`].
pub fn format_tamper_plan(plan: &TamperPlan) -> String {
    plan.iter()
        .map(|((seq, _), t)| match t {
            Tamper::Drop => format!("{seq}:drop"),
            Tamper::Xor { offset, bytes } => format!("{seq}:xor:{offset}:{}", hex::encode(bytes)),
            Tamper::FlipBit(bit) => format!("{seq}:flip:{bit}"),
            Tamper::Replace(b) => format!("{seq}:replace:{}", hex::encode(b)),
            Tamper::Inject(b) => format!("{seq}:inject:{}", hex::encode(b)),
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Everything a run produced. Only `wall_time_ms` varies between runs with
/// the same scenario.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub run: SessionRun,
    pub verdict: Option<AttackVerdict>,
    pub expectation_met: Option<bool>,
    pub store_updated: bool,
    pub noop_change: bool,
    pub wall_time_ms: u128,
    pub transcript_path: Option<PathBuf>,
}

impl RunReport {
    /// Key/value report text. `with_wall_time = false` gives the
    /// deterministic form used for golden comparisons.
    pub fn render(&self, with_wall_time: bool) -> String {
        let o = &self.run.outcome;
        let key = |k: &Option<crate::group::SharedKey>| k.as_ref().map_or_else(|| "-".to_string(), |k| format!("{:x}", k.value()));
        let mut out = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        line("scenario", &self.scenario);
        line("protocol", &self.run.transcript.protocol);
        line("terminal", &o.terminal.name());
        line("alice_phase", &o.alice.phase.name());
        line("bob_phase", &o.bob.phase.name());
        line("alice_error", &o.alice.error.as_ref().map_or_else(|| "-".to_string(), |e| e.to_string()));
        line("bob_error", &o.bob.error.as_ref().map_or_else(|| "-".to_string(), |e| e.to_string()));
        line("alice_key1", &key(&o.alice.key1));
        line("alice_key2", &key(&o.alice.key2));
        line("bob_key1", &key(&o.bob.key1));
        line("bob_key2", &key(&o.bob.key2));
        line("bob_stored_pw", &o.bob.stored_pw);
        line("iterations_used", &o.bob.iterations_used);
        line("store_updated", &self.store_updated);
        if self.noop_change {
            line("note", &"new password equals old password");
        }
        if let Some(v) = &self.verdict {
            line("attack", &v.attack);
            line("succeeded", &v.succeeded);
            for (k, val) in &v.evidence {
                line(&format!("evidence.{k}"), val);
            }
        }
        if let Some(met) = self.expectation_met {
            line("expectation_met", &met);
        }
        if let Some(p) = &self.transcript_path {
            line("transcript", &p.display());
        }
        if with_wall_time {
            line("wall_time_ms", &self.wall_time_ms);
        }
        out
    }
}

/// Runs `s` deterministically from its seed. The store changes only when
/// Bob accepts. When `out_dir` is set, `<name>.transcript` and
/// `<name>.report` are written there.
pub fn run_scenario(s: &Scenario, store: &mut PasswordStore, out_dir: Option<&Path>) -> Result<RunReport, HarnessError> {
    let elapsed_ms = stopwatch();
    let params = s.preset.load_from_env()?;
    let dictionary = match (&s.dictionary, s.needs_dictionary()) {
        (Some(src), _) => src.load()?,
        (None, false) => Dictionary::default(),
        (None, true) => return Err(HarnessError::Config(format!("scenario `{}` needs a dictionary", s.name))),
    };

    let mut parties = Parties::seeded(&params, s.pw.clone(), s.new_pw.clone(), s.seed, dictionary.clone());
    parties.id_a = s.id_a.clone();
    parties.id_b = s.id_b.clone();
    if let Some(stored) = store.get(&s.id_a) {
        parties.bob_pw = stored.clone();
    }

    let (run, verdict) = match &s.attack {
        None => (mitm_channel(s.protocol, &parties, &s.tamper_plan), None),
        Some(AttackSpec::DoS { c }) => {
            let c = c.clone().unwrap_or_else(|| random_c(s.seed, params.byte_len()));
            let (run, verdict) = attack_dos(s.protocol, &parties, &c)?;
            (run, Some(verdict))
        }
        Some(AttackSpec::OfflineGuess { subgroup_filter }) => {
            let run = mitm_channel(s.protocol, &parties, &TamperPlan::new());
            let report = attack_offline_guess(&run.transcript, &dictionary, GuessOptions { subgroup_filter: *subgroup_filter })?;
            let verdict = judge_offline_guess(&report, &run.outcome);
            (run, Some(verdict))
        }
        Some(AttackSpec::KnownKey { leaks }) => {
            let run = mitm_channel(s.protocol, &parties, &TamperPlan::new());
            let compromised = leak(&run, leaks);
            let verdict = attack_known_key(&run, &compromised, &dictionary)?;
            (run, Some(verdict))
        }
    };

    let mut store_updated = false;
    if run.outcome.terminal == Terminal::Accepted {
        store.update(s.id_a.clone(), run.outcome.bob.stored_pw.clone())?;
        store_updated = true;
    }

    let mut report = RunReport {
        scenario: s.name.clone(),
        expectation_met: s.expect_success.zip(verdict.as_ref()).map(|(want, v)| want == v.succeeded),
        verdict,
        run,
        store_updated,
        noop_change: s.pw == s.new_pw,
        wall_time_ms: 0,
        transcript_path: None,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.transcript", s.name));
        emit_transcript(&report.run.transcript, &path)?;
        report.transcript_path = Some(path);
    }
    report.wall_time_ms = elapsed_ms();
    if let Some(dir) = out_dir {
        std::fs::write(dir.join(format!("{}.report", s.name)), report.render(true))?;
    }
    Ok(report)
}

#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl FnOnce() -> u128 {
    let started = std::time::Instant::now();
    move || started.elapsed().as_millis()
}

// No clock on wasm32-unknown-unknown; Instant::now panics there.
#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl FnOnce() -> u128 {
    || 0
}

/// The DoS mask used when a scenario does not pin one: `byte_len` bytes
/// from stream 1 of the scenario seed, independent of the exponent stream.
pub fn random_c(seed: u64, byte_len: usize) -> Vec<u8> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut c = vec![0u8; byte_len];
    rng.fill_bytes(&mut c);
    c
}

fn leak(run: &SessionRun, leaks: &[Leak]) -> Compromised {
    let mut compromised = Compromised::default();
    let alice = &run.outcome.alice;
    for l in leaks {
        match l {
            Leak::Key1 => compromised.keys.extend(alice.key1.clone()),
            Leak::Key2 => compromised.keys.extend(alice.key2.clone()),
            Leak::OldPassword => compromised.passwords.push(run.outcome.pw.clone()),
        }
    }
    compromised
}
