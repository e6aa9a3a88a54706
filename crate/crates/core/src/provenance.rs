//! Config hash and master seed stamped on every output file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub config_sha256: String,
    pub master_seed: u64,
}

impl Provenance {
    /// Hashes the canonical serialization of `config`.
    pub fn of<T: Serialize>(config: &T, master_seed: u64) -> crate::Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        Ok(Self {
            config_sha256: sha256_hex(&canonical),
            master_seed,
        })
    }

    /// Lines written as `# ...` comments at the top of CSV outputs.
    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("skewimpute {}", env!("CARGO_PKG_VERSION")),
            format!("config_sha256={}", self.config_sha256),
            format!("master_seed={}", self.master_seed),
        ]
    }

    /// Recovers the provenance from the comment lines of a CSV file.
    pub fn from_comments(text: &str) -> Option<Self> {
        let mut hash = None;
        let mut seed = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some(v) = body.strip_prefix("config_sha256=") {
                hash = Some(v.to_string());
            } else if let Some(v) = body.strip_prefix("master_seed=") {
                seed = v.parse().ok();
            }
        }
        Some(Self {
            config_sha256: hash?,
            master_seed: seed?,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn comments_round_trip() {
        let p = Provenance { config_sha256: "00ff".into(), master_seed: 17 };
        let text = p.comment_lines().iter().map(|l| format!("# {l}\n")).collect::<String>() + "a,b\n";
        assert_eq!(Provenance::from_comments(&text), Some(p));
        assert_eq!(Provenance::from_comments("a,b\n"), None);
    }
}
