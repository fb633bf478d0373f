//! Hierarchical seeds.
//!
//! A [`Seed`] is a master value plus a path of labels. The RNG for a path is
//! ChaCha20 keyed by SHA-256 over a canonical byte encoding of the path:
//!
//! ```text
//! "bellcorr-seed-v1" || master (u64 LE) || for each label:
//!     0x01 || len (u64 LE) || utf8 bytes     (tag)
//!     0x02 || value (u64 LE)                 (index)
//! ```
//!
//! Streams are therefore independent of the order in which trials run.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Tag(String),
    Index(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seed {
    master: u64,
    path: Vec<Label>,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            path: Vec::new(),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn path(&self) -> &[Label] {
        &self.path
    }

    /// Child stream named by a tag.
    pub fn tag(&self, tag: &str) -> Self {
        let mut child = self.clone();
        child.path.push(Label::Tag(tag.to_string()));
        child
    }

    /// Child stream named by an index.
    pub fn index(&self, i: u64) -> Self {
        let mut child = self.clone();
        child.path.push(Label::Index(i));
        child
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(b"bellcorr-seed-v1");
        h.update(self.master.to_le_bytes());
        for label in &self.path {
            match label {
                Label::Tag(t) => {
                    h.update([1u8]);
                    h.update((t.len() as u64).to_le_bytes());
                    h.update(t.as_bytes());
                }
                Label::Index(i) => {
                    h.update([2u8]);
                    h.update(i.to_le_bytes());
                }
            }
        }
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha20Rng::from_seed(key)
    }
}

/// `master:tag:index:...`, with no characters that need CSV quoting.
impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.master)?;
        for label in &self.path {
            match label {
                Label::Tag(t) => write!(f, ":{t}")?,
                Label::Index(i) => write!(f, ":{i}")?,
            }
        }
        Ok(())
    }
}
