use pwchange_wasm::{dos_attack_json, guess_sweep_json, honest_run_json};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).expect("valid json")
}

#[test]
fn honest_run_accepts() {
    for protocol in ["chang", "proposed"] {
        let v = parse(honest_run_json(protocol, "desk", 3, "07", "0b", 64));
        assert_eq!(v["terminal"], "accepted");
        assert_eq!(v["bob_stored_pw"], "0b");
        assert_eq!(v["transcript"].as_str().unwrap().lines().count(), 4);
    }
}

#[test]
fn dos_splits_the_two_protocols() {
    let chang = parse(dos_attack_json("chang", "desk", 3, "07", "0b", 64, "0000000000000005"));
    assert_eq!(chang["verdict"]["succeeded"], true);
    assert_eq!(chang["bob_stored_pw"], "0e");
    let proposed = parse(dos_attack_json("proposed", "desk", 3, "07", "0b", 64, "0000000000000005"));
    assert_eq!(proposed["verdict"]["succeeded"], false);
    assert_eq!(proposed["bob_phase"], "rejected");
    // Empty mask means "draw one from the seed".
    assert!(dos_attack_json("chang", "desk", 3, "07", "0b", 64, "").is_ok());
}

#[test]
fn sweep_rows_shrink_for_chang_only() {
    let chang = parse(guess_sweep_json("chang", "desk", 3, "07", "0b", 255));
    let rows = chang["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let last = rows.last().unwrap();
    assert_eq!(last["true_pair_kept"], true);
    assert!(last["ratio"].as_f64().unwrap() < 0.05);
    let proposed = parse(guess_sweep_json("proposed", "desk", 3, "07", "0b", 255));
    assert!(proposed["rows"].as_array().unwrap().iter().all(|r| r["ratio_vs_baseline"] == 1.0));
}

#[test]
fn bad_input_is_an_error_string() {
    assert!(honest_run_json("eke", "desk", 1, "07", "0b", 16).is_err());
    assert!(honest_run_json("chang", "demo", 1, "07", "0b", 16).is_err());
    assert!(dos_attack_json("chang", "desk", 1, "07", "0b", 16, "05").is_err());
    assert!(honest_run_json("chang", "desk", 1, "zz", "0b", 16).is_err());
}
