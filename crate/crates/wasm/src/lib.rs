//! Browser bindings. Each export takes plain strings and numbers and returns
//! a JSON string; the `*_json` functions underneath do the work and are
//! tested natively.

use pwchange::adversary::{attack_offline_guess, mitm_channel, GuessOptions, Parties, Protocol, SessionRun, TamperPlan};
use pwchange::harness::{render_transcript, run_scenario, AttackSpec, DictionarySource, PasswordStore, Scenario};
use pwchange::{Dictionary, Password, Preset};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Demo dictionaries are `01, 02, ...`, one byte wide.
const MAX_DICTIONARY: usize = 255;

fn scenario(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize) -> Result<Scenario, String> {
    let pw_of = |s: &str| Password::from_hex(s).map_err(|e| format!("password `{s}`: {e}"));
    let preset: Preset = preset.parse().map_err(|e| format!("{e}"))?;
    if preset == Preset::Demo {
        return Err("the demo page only runs the tiny and desk groups".into());
    }
    let mut s = Scenario::new("web", protocol.parse::<Protocol>()?, preset, seed, pw_of(pw)?, pw_of(new_pw)?);
    s.dictionary = Some(DictionarySource::Sequential { width: 1, start: 1, count: dict_size.clamp(1, MAX_DICTIONARY) });
    Ok(s)
}

fn run_json(s: &Scenario) -> Result<String, String> {
    let report = run_scenario(s, &mut PasswordStore::in_memory(), None).map_err(|e| e.to_string())?;
    let mut out = session_json(&report.run);
    if let Some(v) = &report.verdict {
        out["verdict"] = json!({
            "attack": v.attack.name(),
            "succeeded": v.succeeded,
            "evidence": v.evidence.iter().map(|(k, val)| json!([k, val])).collect::<Vec<_>>(),
        });
    }
    Ok(out.to_string())
}

fn session_json(run: &SessionRun) -> Value {
    let o = &run.outcome;
    json!({
        "terminal": o.terminal.name(),
        "alice_phase": o.alice.phase.name(),
        "bob_phase": o.bob.phase.name(),
        "bob_stored_pw": o.bob.stored_pw.to_hex(),
        "iterations_used": o.bob.iterations_used,
        "transcript": render_transcript(&run.transcript),
    })
}

pub fn honest_run_json(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize) -> Result<String, String> {
    run_json(&scenario(protocol, preset, seed, pw, new_pw, dict_size)?)
}

pub fn dos_attack_json(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize, c: &str) -> Result<String, String> {
    let mut s = scenario(protocol, preset, seed, pw, new_pw, dict_size)?;
    let c = if c.trim().is_empty() { None } else { Some(hex::decode(c.trim()).map_err(|e| format!("c: {e}"))?) };
    s.attack = Some(AttackSpec::DoS { c });
    run_json(&s)
}

/// Offline-guess survivors for dictionary prefixes of 16, 32, ... entries.
pub fn guess_sweep_json(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize) -> Result<String, String> {
    let s = scenario(protocol, preset, seed, pw, new_pw, dict_size)?;
    let params = s.preset.builtin();
    let dictionary: Dictionary = s.dictionary.as_ref().expect("set by scenario()").load().map_err(|e| e.to_string())?;
    let run = mitm_channel(s.protocol, &Parties::seeded(&params, s.pw.clone(), s.new_pw.clone(), s.seed, dictionary.clone()), &TamperPlan::new());

    let mut rows = Vec::new();
    let mut n = 16.min(dictionary.len());
    loop {
        let report = attack_offline_guess(&run.transcript, &dictionary.truncated(n), GuessOptions::default()).map_err(|e| e.to_string())?;
        rows.push(json!({
            "size": n,
            "total_pairs": report.total_pairs,
            "baseline_pairs": report.baseline_pairs,
            "survivors": report.candidates.len(),
            "ratio": report.reduction_ratio(),
            "ratio_vs_baseline": report.ratio_vs_baseline(),
            "true_pair_kept": report.candidates.contains(&s.pw, &s.new_pw),
        }));
        if n == dictionary.len() {
            break;
        }
        n = (n * 2).min(dictionary.len());
    }
    Ok(json!({ "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn honest_run(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize) -> Result<String, JsValue> {
    honest_run_json(protocol, preset, seed, pw, new_pw, dict_size).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dos_attack(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize, c: &str) -> Result<String, JsValue> {
    dos_attack_json(protocol, preset, seed, pw, new_pw, dict_size, c).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn guess_sweep(protocol: &str, preset: &str, seed: u64, pw: &str, new_pw: &str, dict_size: usize) -> Result<String, JsValue> {
    guess_sweep_json(protocol, preset, seed, pw, new_pw, dict_size).map_err(|e| JsValue::from_str(&e))
}
