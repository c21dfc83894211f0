//! Transcript text format.
//!
//! ```text
//! #transcript protocol=chang p=17 q=b g=4 id_a=616c696365 id_b=626f62
//! 1  A->B  delivered  1519  -
//! 2  B->A  delivered  0c...  -
//! 3  A->B  modified  5e...  5b...
//! ```
//!
//! One header line, then one tab-separated record per channel event:
//! sequence number, direction, action, payload hex, original hex or `-`
//! (shown space-aligned above; the file uses single tabs).
//! Hex is lowercase and the output ends with a newline.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;

use super::HarnessError;
use crate::adversary::{Action, ChannelEvent, Direction, Protocol, Transcript};
use crate::chang::{ChangMsg1, ChangMsg2, ChangMsg3};
use crate::codec::Identity;
use crate::error::ProtocolError;
use crate::group::GroupParams;
use crate::proposed::{PropMsg1, PropMsg2, PropMsg3};

pub fn render_transcript(t: &Transcript) -> String {
    let mut out = format!(
        "#transcript protocol={} p={:x} q={:x} g={:x} id_a={} id_b={}\n",
        t.protocol,
        t.params.p(),
        t.params.q(),
        t.params.g(),
        t.id_a,
        t.id_b
    );
    for e in &t.events {
        let original = e.original.as_ref().map_or_else(|| "-".to_string(), hex::encode);
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", e.seq, e.direction.name(), e.action.name(), hex::encode(&e.payload), original);
    }
    out
}

pub fn emit_transcript(t: &Transcript, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render_transcript(t))?;
    Ok(())
}

pub fn parse_transcript(text: &str) -> Result<Transcript, HarnessError> {
    let bad = |n: usize, what: String| HarnessError::Config(format!("transcript line {n}: {what}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty".into()))?;
    let fields = header
        .strip_prefix("#transcript ")
        .ok_or_else(|| bad(1, "missing #transcript header".into()))?;

    let mut protocol = None;
    let (mut p, mut q, mut g) = (None, None, None);
    let (mut id_a, mut id_b) = (None, None);
    for field in fields.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| bad(1, format!("bad header field `{field}`")))?;
        let int = || BigUint::parse_bytes(v.as_bytes(), 16).ok_or_else(|| bad(1, format!("`{k}` is not hex")));
        let id = || Identity::from_hex(v).map_err(|e| bad(1, e.to_string()));
        match k {
            "protocol" => protocol = Some(v.parse::<Protocol>().map_err(|e| bad(1, e))?),
            "p" => p = Some(int()?),
            "q" => q = Some(int()?),
            "g" => g = Some(int()?),
            "id_a" => id_a = Some(id()?),
            "id_b" => id_b = Some(id()?),
            _ => return Err(bad(1, format!("unknown header field `{k}`"))),
        }
    }
    let missing = |k: &str| bad(1, format!("header lacks `{k}`"));
    let params = GroupParams::new(p.ok_or_else(|| missing("p"))?, q.ok_or_else(|| missing("q"))?, g.ok_or_else(|| missing("g"))?)
        .map_err(|e| bad(1, e.to_string()))?;

    let mut events = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [seq, dir, action, payload, original] = cols[..] else {
            return Err(bad(n, format!("expected 5 columns, got {}", cols.len())));
        };
        let hex_col = |s: &str| hex::decode(s).map_err(|e| bad(n, e.to_string()));
        let action: Action = action.parse().map_err(|e| bad(n, e))?;
        let original = if original == "-" { None } else { Some(hex_col(original)?) };
        if (action == Action::Modified) != original.is_some() {
            return Err(bad(n, "only modified events carry an original".into()));
        }
        events.push(ChannelEvent {
            seq: seq.parse().map_err(|_| bad(n, format!("bad seq `{seq}`")))?,
            direction: dir.parse::<Direction>().map_err(|e| bad(n, e))?,
            action,
            payload: hex_col(payload)?,
            original,
        });
    }
    if events.windows(2).any(|w| w[0].seq > w[1].seq) {
        return Err(HarnessError::Config("transcript events out of order".into()));
    }

    Ok(Transcript {
        protocol: protocol.ok_or_else(|| missing("protocol"))?,
        params,
        id_a: id_a.ok_or_else(|| missing("id_a"))?,
        id_b: id_b.ok_or_else(|| missing("id_b"))?,
        events,
    })
}

/// A decoded protocol message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Chang1(ChangMsg1),
    Chang2(ChangMsg2),
    Chang3(ChangMsg3),
    Prop1(PropMsg1),
    Prop2(PropMsg2),
    Prop3(PropMsg3),
}

impl Message {
    pub fn decode(protocol: Protocol, seq: u32, bytes: &[u8], params: &GroupParams) -> Result<Self, ProtocolError> {
        Ok(match (protocol, seq) {
            (Protocol::Chang, 1) => Message::Chang1(ChangMsg1::from_bytes(bytes, params)?),
            (Protocol::Chang, 2) => Message::Chang2(ChangMsg2::from_bytes(bytes, params)?),
            (Protocol::Chang, 3) => Message::Chang3(ChangMsg3::from_bytes(bytes)?),
            (Protocol::Proposed, 1) => Message::Prop1(PropMsg1::from_bytes(bytes, params)?),
            (Protocol::Proposed, 2) => Message::Prop2(PropMsg2::from_bytes(bytes, params)?),
            (Protocol::Proposed, 3) => Message::Prop3(PropMsg3::from_bytes(bytes)?),
            _ => return Err(ProtocolError::Malformed(crate::codec::CodecError::Width { expected: 0, got: bytes.len() })),
        })
    }

    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        match self {
            Message::Chang1(m) => m.to_bytes(),
            Message::Chang2(m) => m.to_bytes(params),
            Message::Chang3(m) => m.to_bytes(),
            Message::Prop1(m) => m.to_bytes(),
            Message::Prop2(m) => m.to_bytes(params),
            Message::Prop3(m) => m.to_bytes(),
        }
    }
}

/// Decodes every payload (and original) in the transcript.
pub fn replay_messages(t: &Transcript) -> Vec<(u32, Result<Message, ProtocolError>)> {
    t.events
        .iter()
        .flat_map(|e| std::iter::once(&e.payload).chain(e.original.as_ref()).map(move |b| (e.seq, b)))
        .map(|(seq, bytes)| (seq, Message::decode(t.protocol, seq, bytes, &t.params)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{mitm_channel, Parties, Tamper, TamperPlan};
    use crate::codec::Password;
    use crate::dictionary::Dictionary;

    fn run(protocol: Protocol, plan: &TamperPlan) -> Transcript {
        let p = GroupParams::from_u64(23, 11, 4).unwrap();
        let e = |v| p.exponent_u64(v).unwrap();
        let pw = |b| Password::new(vec![b]).unwrap();
        let parties = Parties::with_exponents(&p, pw(7), pw(11), [e(3), e(7), e(5)], Dictionary::sequential(1, 1, 16));
        mitm_channel(protocol, &parties, plan).transcript
    }

    #[test]
    fn honest_run_has_three_delivered_records() {
        let text = render_transcript(&run(Protocol::Chang, &TamperPlan::new()));
        let records: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.split('\t').nth(2) == Some("delivered")));
        assert_eq!(records[0], "1\tA->B\tdelivered\t1519\t-");
    }

    #[test]
    fn roundtrip_and_replay() {
        let plan = TamperPlan::new().with(1, Tamper::Xor { offset: 1, bytes: vec![5] }).with(3, Tamper::FlipBit(3));
        for protocol in [Protocol::Chang, Protocol::Proposed] {
            let t = run(protocol, &plan);
            let text = render_transcript(&t);
            let back = parse_transcript(&text).unwrap();
            assert_eq!(back, t);
            assert_eq!(render_transcript(&back), text);
            for (seq, msg) in replay_messages(&back) {
                let msg = msg.unwrap();
                let e = back.events.iter().find(|e| e.seq == seq).unwrap();
                let bytes = msg.encode(&back.params);
                assert!(bytes == e.payload || Some(&bytes) == e.original.as_ref());
            }
        }
    }

    #[test]
    fn rejects_bad_records() {
        let text = render_transcript(&run(Protocol::Chang, &TamperPlan::new()));
        assert!(parse_transcript(&text.replace("delivered", "stolen")).is_err());
        assert!(parse_transcript(&text.replacen("\t-", "\t00", 1)).is_err());
        assert!(parse_transcript("1\tA->B\tdelivered\t00\t-\n").is_err());
    }
}
