//! JSON key files: `{"group": "...", "sk": "<hex>", "pk": "<hex>"}`.

use serde::{Deserialize, Serialize};

use crate::ahe::{Keypair, SecretKey};
use crate::group::{Group, GroupKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub group: String,
    pub sk: String,
    pub pk: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KeyFileError {
    #[error("key file is for group {found}, expected {expected}")]
    Group { expected: String, found: String },
    #[error("malformed {0}")]
    Malformed(&'static str),
    #[error("public key does not match secret key")]
    Mismatch,
}

impl KeyFile {
    pub fn from_keypair<G: Group>(kp: &Keypair<G>) -> Self {
        KeyFile {
            group: G::NAME.to_string(),
            sk: hex::encode(kp.sk.to_bytes()),
            pk: hex::encode(kp.pk.to_bytes()),
        }
    }

    pub fn kind(&self) -> Result<GroupKind, KeyFileError> {
        self.group.parse().map_err(|_| KeyFileError::Malformed("group"))
    }

    pub fn keypair<G: Group>(&self) -> Result<Keypair<G>, KeyFileError> {
        if self.group != G::NAME {
            return Err(KeyFileError::Group {
                expected: G::NAME.into(),
                found: self.group.clone(),
            });
        }
        let sk: [u8; 32] = hex::decode(&self.sk)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or(KeyFileError::Malformed("sk"))?;
        let sk = SecretKey::<G>::from_bytes(&sk).ok_or(KeyFileError::Malformed("sk"))?;
        let kp = Keypair::from_secret(sk);
        if hex::encode(kp.pk.to_bytes()) != self.pk.to_ascii_lowercase() {
            return Err(KeyFileError::Mismatch);
        }
        Ok(kp)
    }
}
