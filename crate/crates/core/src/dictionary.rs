//! Ordered candidate password lists.
//!
//! File format: one hex-encoded password per line. Blank lines and `#`
//! comments are skipped.

use std::path::Path;

use crate::codec::{CodecError, Password};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dictionary(Vec<Password>);

impl Dictionary {
    pub fn new(entries: Vec<Password>) -> Self {
        Self(entries)
    }

    /// `count` passwords of exactly `width` bytes holding the big-endian
    /// integers `start, start + 1, ...`.
    pub fn sequential(width: usize, start: u64, count: usize) -> Self {
        assert!((1..=8).contains(&width), "width must be 1..=8");
        let entries = (0..count as u64)
            .map(|i| {
                let v = (start + i).to_be_bytes();
                Password::new(v[8 - width..].to_vec()).expect("width is in bounds")
            })
            .collect();
        Self(entries)
    }

    pub fn parse(text: &str) -> Result<Self, (usize, CodecError)> {
        text.lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(n, l)| Password::from_hex(l).map_err(|e| (n, e)))
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|(line, e)| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{line}: {e}", path.display()))
        })
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|p| p.to_hex() + "\n").collect()
    }

    pub fn entries(&self) -> &[Password] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, pw: &Password) -> Option<usize> {
        self.0.iter().position(|p| p == pw)
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self(self.0.iter().take(n).cloned().collect())
    }
}

impl std::ops::Deref for Dictionary {
    type Target = [Password];

    fn deref(&self) -> &[Password] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_entries() {
        let d = Dictionary::sequential(1, 1, 16);
        assert_eq!(d.len(), 16);
        assert_eq!(d[0].as_bytes(), &[0x01]);
        assert_eq!(d[15].as_bytes(), &[0x10]);
        let d = Dictionary::sequential(2, 0, 4096);
        assert_eq!(d[4095].as_bytes(), &[0x0f, 0xff]);
    }

    #[test]
    fn parse_and_render() {
        let d = Dictionary::parse("# words\n07\n\n0b\nAABB\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.position(&Password::from_hex("0b").unwrap()), Some(1));
        assert_eq!(Dictionary::parse(&d.to_text()).unwrap(), d);
        assert_eq!(Dictionary::parse("07\nxyz\n").unwrap_err().0, 2);
    }
}
