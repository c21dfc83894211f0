//! Frozen reference outputs: hash vectors plus honest and DoS transcripts
//! of each protocol on the `desk` preset. The checked-in files under
//! `testdata/` are compiled in; [`verify`] regenerates everything and
//! compares byte for byte.

use std::path::Path;

use crate::adversary::{attack_dos, mitm_channel, Parties, Protocol, TamperPlan};
use crate::codec::{hash_h, Password};
use crate::dictionary::Dictionary;
use crate::harness::render_transcript;
use crate::presets::Preset;

pub const GOLDEN_SEED: u64 = 20240611;
const GOLDEN_C: &[u8] = &[0, 0, 0, 0, 0, 0, 0, 0x05];

pub struct GoldenFile {
    pub name: &'static str,
    pub frozen: &'static str,
    generate: fn() -> String,
}

impl GoldenFile {
    pub fn generate(&self) -> String {
        (self.generate)()
    }
}

pub const FILES: &[GoldenFile] = &[
    GoldenFile { name: "hash_vectors.txt", frozen: include_str!("../testdata/hash_vectors.txt"), generate: hash_vectors },
    GoldenFile { name: "chang_honest.transcript", frozen: include_str!("../testdata/chang_honest.transcript"), generate: || honest(Protocol::Chang) },
    GoldenFile { name: "chang_dos.transcript", frozen: include_str!("../testdata/chang_dos.transcript"), generate: || dos(Protocol::Chang) },
    GoldenFile { name: "proposed_honest.transcript", frozen: include_str!("../testdata/proposed_honest.transcript"), generate: || honest(Protocol::Proposed) },
    GoldenFile { name: "proposed_dos.transcript", frozen: include_str!("../testdata/proposed_dos.transcript"), generate: || dos(Protocol::Proposed) },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub matches: bool,
    /// First differing line, 1-based, when the check fails.
    pub first_diff: Option<usize>,
}

pub fn verify() -> Vec<GoldenCheck> {
    FILES
        .iter()
        .map(|f| {
            let fresh = f.generate();
            let first_diff = (fresh != f.frozen).then(|| {
                let (a, b): (Vec<_>, Vec<_>) = (fresh.lines().collect(), f.frozen.lines().collect());
                (0..a.len().max(b.len())).find(|&i| a.get(i) != b.get(i)).unwrap_or(a.len()) + 1
            });
            GoldenCheck { name: f.name, matches: first_diff.is_none(), first_diff }
        })
        .collect()
}

/// Rewrites the golden files into `dir`. Only for deliberate format changes.
pub fn bless(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for f in FILES {
        std::fs::write(dir.join(f.name), f.generate())?;
    }
    Ok(())
}

fn hash_vectors() -> String {
    let vectors: [(&str, &[&[u8]]); 4] = [
        ("abc", &[b"abc"]),
        ("split-ab-c", &[b"ab", b"c"]),
        ("split-a-bc", &[b"a", b"bc"]),
        // Step-2 tag on the tiny group: Key1=3, R_A=18, x2=03, ID_B, ID_A.
        ("tiny-step2", &[&[0x03], &[0x12], &[0x03], b"bob", b"alice"]),
    ];
    vectors
        .iter()
        .map(|(label, fields)| {
            let inputs: Vec<String> = fields.iter().map(hex::encode).collect();
            format!("{label}\t{}\t{}\n", inputs.join(","), hash_h(fields).to_hex())
        })
        .collect()
}

fn parties() -> Parties {
    let pw = |h| Password::from_hex(h).expect("static password");
    Parties::seeded(&Preset::Desk.builtin(), pw("07"), pw("0b"), GOLDEN_SEED, Dictionary::sequential(1, 0, 256))
}

fn honest(protocol: Protocol) -> String {
    render_transcript(&mitm_channel(protocol, &parties(), &TamperPlan::new()).transcript)
}

fn dos(protocol: Protocol) -> String {
    let (run, _) = attack_dos(protocol, &parties(), GOLDEN_C).expect("static mask fits desk");
    render_transcript(&run.transcript)
}
