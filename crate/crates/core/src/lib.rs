//! Two-party secure evaluation of decision forests.
//!
//! A server holding a forest and a client holding a feature vector decide
//! accept/reject without revealing the model or the input. Two protocols
//! are provided: [`hbc`] against an honest-but-curious client, and
//! [`malicious`] against a client that may deviate arbitrarily.

pub mod ahe;
pub mod analysis;
pub mod codec;
pub mod encoding;
pub mod forest;
pub mod gc;
pub mod group;
pub mod hbc;
pub mod keyfile;
pub mod malicious;
pub mod ot;
pub mod wire;
pub mod zkp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn from_bool(accept: bool) -> Self {
        if accept {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }

    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Accept => "ACCEPT",
            Decision::Reject => "REJECT",
        })
    }
}
