//! Acceptance criteria. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pwchange::adversary::{
    attack_dos, attack_known_key, attack_offline_guess, judge_offline_guess, mitm_channel, Compromised, GuessOptions, Parties,
    Phase, Protocol, Tamper, TamperPlan, Terminal,
};
use pwchange::codec::{decode_element, encode_element, fit, mask, xor};
use pwchange::harness::random_c;
use pwchange::{golden, Dictionary, GroupParams, Password, Preset};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn pw(hex: &str) -> Password {
    Password::from_hex(hex).unwrap()
}

fn tiny() -> GroupParams {
    Preset::Tiny.builtin()
}

fn desk() -> GroupParams {
    Preset::Desk.builtin()
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

// 1 -------------------------------------------------------------------------

fn honest_completion() -> Check {
    let started = Instant::now();
    let params = tiny();
    let dict = Dictionary::sequential(1, 1, 16);
    let e = |v: u64| params.exponent_u64(v).unwrap();
    let mut runs = 0;
    for (idx, new_pw) in dict.iter().enumerate() {
        let old = dict[(idx + 5) % dict.len()].clone();
        for a in 1..=10 {
            for b in 1..=10 {
                for c in 1..=10 {
                    for protocol in [Protocol::Chang, Protocol::Proposed] {
                        // Chang has no third exponent; run it once per (a, b).
                        if protocol == Protocol::Chang && c > 1 {
                            continue;
                        }
                        let parties = Parties::with_exponents(&params, old.clone(), new_pw.clone(), [e(a), e(b), e(c)], dict.clone());
                        let o = mitm_channel(protocol, &parties, &TamperPlan::new()).outcome;
                        let at = format!("{protocol} a={a} b={b} c={c} new_pw={new_pw}");
                        ensure!(o.terminal == Terminal::Accepted, "{at}: {:?}", o.terminal);
                        ensure!(o.alice.key1.is_some() && o.alice.key1 == o.bob.key1, "{at}: key1 differs");
                        ensure!(o.alice.key2 == o.bob.key2, "{at}: key2 differs");
                        ensure!(o.bob.stored_pw == *new_pw, "{at}: Bob stored {}", o.bob.stored_pw);
                        if protocol == Protocol::Proposed {
                            ensure!(o.alice.key2.is_some(), "{at}: no key2");
                            ensure!(o.bob.recovered_new_pw.as_ref() == Some(new_pw), "{at}: recovered {:?}", o.bob.recovered_new_pw);
                            ensure!(o.bob.iterations_used == idx + 1, "{at}: {} iterations", o.bob.iterations_used);
                        }
                        runs += 1;
                    }
                }
            }
        }
    }
    let took = within(Duration::from_secs(10), started)?;
    Ok(format!("{runs} sessions in {took:.2?}"))
}

// 2 -------------------------------------------------------------------------

const SEED: u64 = 0x5eed;

fn chang_attacks() -> Check {
    let params = desk();
    let dict = Dictionary::sequential(1, 0, 256);
    let (old, new) = (pw("07"), pw("0b"));
    let parties = Parties::seeded(&params, old.clone(), new.clone(), SEED, dict.clone());
    let mut notes = Vec::new();

    let started = Instant::now();
    let run = mitm_channel(Protocol::Chang, &parties, &TamperPlan::new());
    let report = attack_offline_guess(&run.transcript, &dict, GuessOptions::default()).map_err(|e| e.to_string())?;
    ensure!(report.candidates.contains(&old, &new), "true pair filtered out");
    ensure!(report.reduction_ratio() < 0.05, "ratio {}", report.reduction_ratio());
    ensure!(report.total_pairs == 256 * 256, "total pairs {}", report.total_pairs);
    ensure!(judge_offline_guess(&report, &run.outcome).succeeded, "offline-guess oracle says failed");
    notes.push(format!("guess ratio {:.4} ({:.2?})", report.reduction_ratio(), within(Duration::from_secs(5), started)?));

    let started = Instant::now();
    let c = random_c(SEED, params.byte_len());
    let (dos, verdict) = attack_dos(Protocol::Chang, &parties, &c).map_err(|e| e.to_string())?;
    ensure!(verdict.succeeded, "DoS verdict failed");
    ensure!(dos.outcome.bob.phase == Phase::Accepted, "Bob {:?}", dos.outcome.bob.phase);
    let divergence = xor(&fit(dos.outcome.bob.stored_pw.as_bytes(), params.byte_len()), &fit(new.as_bytes(), params.byte_len()));
    ensure!(divergence == c, "divergence {} != c {}", hex::encode(&divergence), hex::encode(&c));
    notes.push(format!("dos c={} ({:.2?})", hex::encode(&c), within(Duration::from_secs(5), started)?));

    let started = Instant::now();
    let key = run.outcome.alice.key1.clone().ok_or("no session key")?;
    let verdict = attack_known_key(&run, &Compromised::keys([key]), &dict).map_err(|e| e.to_string())?;
    ensure!(verdict.succeeded, "known-key verdict failed");
    ensure!(verdict.evidence("recovered_new_pw") == Some(new.to_hex().as_str()), "recovered {:?}", verdict.evidence("recovered_new_pw"));
    notes.push(format!("known-key recovered {} ({:.2?})", new, within(Duration::from_secs(5), started)?));
    Ok(notes.join(", "))
}

// 3 -------------------------------------------------------------------------

fn proposed_resistance() -> Check {
    let params = desk();
    let dict = Dictionary::sequential(2, 0, 4096);
    let (old, new) = (pw("0007"), pw("0a0b"));
    let parties = Parties::seeded(&params, old.clone(), new.clone(), SEED, dict.clone());
    let limit = Duration::from_secs(30);
    let mut notes = Vec::new();

    let started = Instant::now();
    let run = mitm_channel(Protocol::Proposed, &parties, &TamperPlan::new());
    ensure!(run.outcome.terminal == Terminal::Accepted, "honest run {:?}", run.outcome.terminal);
    let report = attack_offline_guess(&run.transcript, &dict, GuessOptions::default()).map_err(|e| e.to_string())?;
    let r = report.ratio_vs_baseline();
    ensure!((0.95..=1.0).contains(&r), "ratio vs baseline {r}");
    ensure!(report.candidates.contains(&old, &new), "true pair filtered out");
    ensure!(!judge_offline_guess(&report, &run.outcome).succeeded, "offline-guess oracle says succeeded");
    notes.push(format!("guess ratio/baseline {r:.4} ({:.2?})", within(limit, started)?));

    let started = Instant::now();
    let c = random_c(SEED, params.byte_len());
    let (dos, verdict) = attack_dos(Protocol::Proposed, &parties, &c).map_err(|e| e.to_string())?;
    ensure!(!verdict.succeeded, "DoS verdict succeeded");
    ensure!(dos.outcome.bob.phase == Phase::Rejected, "Bob {:?}", dos.outcome.bob.phase);
    ensure!(dos.outcome.bob.stored_pw == old, "Bob's password moved to {}", dos.outcome.bob.stored_pw);
    let iters = dos.outcome.bob.iterations_used;
    ensure!(iters <= dict.len(), "{iters} iterations");
    notes.push(format!("dos rejected after {iters} ({:.2?})", within(limit, started)?));

    for (label, key) in [("key1", &run.outcome.alice.key1), ("key2", &run.outcome.alice.key2)] {
        let started = Instant::now();
        let key = key.clone().ok_or(format!("no {label}"))?;
        let verdict = attack_known_key(&run, &Compromised::keys([key]), &dict).map_err(|e| e.to_string())?;
        ensure!(!verdict.succeeded, "known-key with {label} succeeded");
        notes.push(format!("{label} leak harmless ({:.2?})", within(limit, started)?));
    }
    Ok(notes.join(", "))
}

// 4 -------------------------------------------------------------------------

fn algebra() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let random_pw = |rng: &mut ChaCha20Rng| {
        let mut bytes = vec![0u8; rng.gen_range(1..=64)];
        rng.fill_bytes(&mut bytes);
        Password::new(bytes).unwrap()
    };

    for i in 0..1000 {
        let mut data = vec![0u8; rng.gen_range(1..=300)];
        rng.fill_bytes(&mut data);
        let p = random_pw(&mut rng);
        ensure!(mask(mask(&data, &p).as_bytes(), &p).as_bytes() == data.as_slice(), "involution case {i}");
    }
    for i in 0..1000 {
        let mut data = vec![0u8; rng.gen_range(1..=300)];
        rng.fill_bytes(&mut data);
        let (p1, p2) = (random_pw(&mut rng), random_pw(&mut rng));
        let lhs = xor(mask(&data, &p1).as_bytes(), mask(&data, &p2).as_bytes());
        let rhs = xor(&fit(p1.as_bytes(), data.len()), &fit(p2.as_bytes(), data.len()));
        ensure!(lhs == rhs, "xor-difference case {i}");
    }

    let params = tiny();
    for a in 1..=10 {
        for b in 1..=10 {
            let (ea, eb) = (params.exponent_u64(a).unwrap(), params.exponent_u64(b).unwrap());
            let ab = params.dh_key(&params.public(&eb), &ea).map_err(|e| e.to_string())?;
            let ba = params.dh_key(&params.public(&ea), &eb).map_err(|e| e.to_string())?;
            ensure!(ab == ba, "DH asymmetric at a={a} b={b}");
        }
    }
    for v in 1u32..=22 {
        let x = params.element(BigUint::from(v)).map_err(|e| e.to_string())?;
        let back = decode_element(&encode_element(&params, &x), &params).map_err(|e| e.to_string())?;
        ensure!(back == x, "roundtrip {v}");
    }
    let p = params.p().clone();
    for v in 1u32..=22 {
        let x = params.element(BigUint::from(v)).unwrap();
        let mut acc = BigUint::from(1u32);
        for e in 0u32..=22 {
            ensure!(params.pow(&x, &BigUint::from(e)) == acc, "modexp {v}^{e}");
            acc = acc * v % &p;
        }
    }
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!("2000 random cases, exhaustive tiny checks ({took:.2?})"))
}

// 5 -------------------------------------------------------------------------

fn tamper_sweep() -> Check {
    let started = Instant::now();
    let params = desk();
    let parties = Parties::seeded(&params, pw("07"), pw("0b"), SEED, Dictionary::sequential(1, 0, 256));
    let honest = mitm_channel(Protocol::Proposed, &parties, &TamperPlan::new()).transcript;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut accepted = 0;
    for seq in 1..=3u32 {
        let bits = honest.sent(seq).ok_or(format!("no message {seq}"))?.len() * 8;
        for _ in 0..100 {
            let bit = rng.gen_range(0..bits);
            let run = mitm_channel(Protocol::Proposed, &parties, &TamperPlan::new().with(seq, Tamper::FlipBit(bit)));
            if run.outcome.terminal == Terminal::Accepted {
                accepted += 1;
            }
        }
    }
    ensure!(accepted == 0, "{accepted} tampered sessions accepted");
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!("300 flips, 0 accepted ({took:.2?})"))
}

// 6 -------------------------------------------------------------------------

fn golden_vectors() -> Check {
    let first = golden::verify();
    let second = golden::verify();
    for check in &first {
        ensure!(check.matches, "{} differs at line {:?}", check.name, check.first_diff);
    }
    ensure!(first == second, "verify() not repeatable");
    for f in golden::FILES {
        ensure!(f.generate() == f.generate(), "{} not byte-identical across runs", f.name);
    }
    Ok(format!("{} files byte-identical", first.len()))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("honest completion, tiny group, exhaustive", honest_completion),
        ("three-message protocol falls to all three attacks", chang_attacks),
        ("replacement protocol resists all three attacks", proposed_resistance),
        ("algebraic properties", algebra),
        ("single-bit tamper sweep", tamper_sweep),
        ("golden vectors", golden_vectors),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
