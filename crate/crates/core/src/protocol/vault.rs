//! Deliberately toy at-rest encryption for the simulated database.
//!
//! The keystream is just the decimal digits of the gating cipher, repeated and
//! XOR-ed over the data. It exists so that "the file was decrypted" is a
//! bit-exact, testable event — it provides no secrecy whatsoever.

use serde::{Deserialize, Serialize};

/// XORs `data` with the repeated decimal-digit bytes of `key_cipher`.
/// Involutive: applying it twice returns the input.
pub fn keystream_xor(data: &[u8], key_cipher: u64) -> Vec<u8> {
    let key = key_cipher.to_string().into_bytes();
    data.iter()
        .zip(key.iter().cycle())
        .map(|(byte, k)| byte ^ k)
        .collect()
}

/// A named blob in the simulated database, gated by the root class of
/// `key_cipher`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaultEntry {
    pub name: String,
    pub ciphertext: Vec<u8>,
    pub key_cipher: u64,
}

impl VaultEntry {
    pub fn seal(name: impl Into<String>, plaintext: &[u8], key_cipher: u64) -> Self {
        VaultEntry {
            name: name.into(),
            ciphertext: keystream_xor(plaintext, key_cipher),
            key_cipher,
        }
    }

    pub fn open(&self) -> Vec<u8> {
        keystream_xor(&self.ciphertext, self.key_cipher)
    }
}
