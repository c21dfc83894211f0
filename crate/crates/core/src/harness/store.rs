use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::codec::{Identity, Password};

/// Bob's registry of current passwords, one `<hex id> <hex password>` line
/// per entry. Writes go to a sibling temp file that is then renamed over
/// the original.
#[derive(Debug, Clone, Default)]
pub struct PasswordStore {
    entries: BTreeMap<Identity, Password>,
    path: Option<PathBuf>,
}

impl PasswordStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `path`; a missing file is an empty store.
    pub fn open(path: &Path) -> Result<Self, HarnessError> {
        let mut store = Self { entries: BTreeMap::new(), path: Some(path.to_path_buf()) };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(store),
            Err(e) => return Err(e.into()),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| HarnessError::Config(format!("{}:{}: {what}", path.display(), n + 1));
            let (id, pw) = line.split_once(' ').ok_or_else(|| bad("expected `<id> <password>`"))?;
            let id = Identity::from_hex(id).map_err(|e| bad(&e.to_string()))?;
            let pw = Password::from_hex(pw).map_err(|e| bad(&e.to_string()))?;
            store.entries.insert(id, pw);
        }
        Ok(store)
    }

    pub fn get(&self, id: &Identity) -> Option<&Password> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets the entry and persists the whole store atomically.
    pub fn update(&mut self, id: Identity, pw: Password) -> Result<(), HarnessError> {
        let previous = self.entries.insert(id.clone(), pw);
        if let Err(e) = self.persist() {
            match previous {
                Some(p) => self.entries.insert(id, p),
                None => self.entries.remove(&id),
            };
            return Err(e);
        }
        Ok(())
    }

    fn render(&self) -> String {
        self.entries.iter().map(|(id, pw)| format!("{id} {pw}\n")).collect()
    }

    fn persist(&self) -> Result<(), HarnessError> {
        let Some(path) = &self.path else { return Ok(()) };
        let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(self.render().as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}
