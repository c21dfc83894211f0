//! Built-in group parameters and the preset file format.
//!
//! A preset file is flat `key=value` text:
//!
//! ```text
//! name=desk
//! p=fffffffffffffa43
//! q=7ffffffffffffd21
//! g=4
//! ```
//!
//! Values are hex. Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use thiserror::Error;

use crate::group::{GroupError, GroupParams};

/// Environment variable naming a directory of `<name>.preset` files that
/// override the built-in presets.
pub const PRESET_DIR_ENV: &str = "PWCHANGE_PRESET_DIR";

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("unknown preset `{0}`")]
    Unknown(String),
    #[error("preset file: {0}")]
    Format(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// p = 23: small enough to enumerate everything.
    Tiny,
    /// 64-bit safe prime.
    Desk,
    /// RFC 3526 2048-bit MODP group.
    Demo,
}

const DESK_P: &str = "fffffffffffffa43";
const DESK_Q: &str = "7ffffffffffffd21";

const DEMO_P: &str = concat!(
    "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74",
    "020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f1437",
    "4fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7ed",
    "ee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05",
    "98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb",
    "9ed529077096966d670c354e4abc9804f1746c08ca18217c32905e462e36ce3b",
    "e39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718",
    "3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff",
);

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Tiny, Preset::Desk, Preset::Demo];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Tiny => "tiny",
            Preset::Desk => "desk",
            Preset::Demo => "demo",
        }
    }

    /// The compiled-in parameters, validated on every call.
    pub fn builtin(self) -> GroupParams {
        let params = match self {
            Preset::Tiny => GroupParams::from_u64(23, 11, 4),
            Preset::Desk => GroupParams::new(hex_int(DESK_P), hex_int(DESK_Q), BigUint::from(4u32)),
            Preset::Demo => {
                let p = hex_int(DEMO_P);
                let q = (&p - 1u32) >> 1;
                GroupParams::new(p, q, BigUint::from(2u32))
            }
        };
        params.expect("built-in preset is valid")
    }

    /// Resolves the preset, preferring `<dir>/<name>.preset` when `dir` is
    /// given and the file exists.
    pub fn load(self, dir: Option<&Path>) -> Result<GroupParams, PresetError> {
        if let Some(dir) = dir {
            let path = dir.join(format!("{}.preset", self.name()));
            if path.is_file() {
                let (_, params) = parse_preset(&std::fs::read_to_string(path)?)?;
                return Ok(params);
            }
        }
        Ok(self.builtin())
    }

    /// Like [`Preset::load`], reading the directory from [`PRESET_DIR_ENV`].
    pub fn load_from_env(self) -> Result<GroupParams, PresetError> {
        let dir = std::env::var_os(PRESET_DIR_ENV);
        self.load(dir.as_deref().map(Path::new))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = PresetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| PresetError::Unknown(s.to_string()))
    }
}

fn hex_int(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("valid hex literal")
}

/// Parses a preset file and validates the parameters.
pub fn parse_preset(text: &str) -> Result<(String, GroupParams), PresetError> {
    let mut name = None;
    let (mut p, mut q, mut g) = (None, None, None);
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| PresetError::Format(format!("expected key=value, got `{line}`")))?;
        let value = value.trim();
        let int = || {
            BigUint::parse_bytes(value.as_bytes(), 16)
                .ok_or_else(|| PresetError::Format(format!("`{key}` is not hex")))
        };
        match key.trim() {
            "name" => name = Some(value.to_string()),
            "p" => p = Some(int()?),
            "q" => q = Some(int()?),
            "g" => g = Some(int()?),
            other => return Err(PresetError::Format(format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| PresetError::Format(format!("missing `{k}`"));
    let params = GroupParams::new(p.ok_or_else(|| missing("p"))?, q.ok_or_else(|| missing("q"))?, g.ok_or_else(|| missing("g"))?)?;
    Ok((name.ok_or_else(|| missing("name"))?, params))
}

/// Renders parameters in the preset file format.
pub fn format_preset(name: &str, params: &GroupParams) -> String {
    format!("name={name}\np={:x}\nq={:x}\ng={:x}\n", params.p(), params.q(), params.g())
}
