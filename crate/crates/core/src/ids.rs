use std::borrow::Borrow;
use std::fmt;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_ID_LEN: usize = 64;

/// Identifier of a room, object, or agent.
///
/// Identifiers are short ASCII tokens (`[A-Za-z0-9_.-]`, at most 64 bytes).
/// Cloning is cheap; the solver clones graphs by the thousand.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier {0:?}: expected 1-64 characters from [A-Za-z0-9_.-]")]
pub struct InvalidId(pub String);

impl NodeId {
    pub fn new(s: &str) -> Result<Self, InvalidId> {
        if is_valid(s) {
            Ok(NodeId(Arc::from(s)))
        } else {
            Err(InvalidId(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Sorts before every valid id; used as a range bound.
    pub(crate) fn min_value() -> NodeId {
        static EMPTY: LazyLock<NodeId> = LazyLock::new(|| NodeId(Arc::from("")));
        EMPTY.clone()
    }
}

fn is_valid(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= MAX_ID_LEN
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

/// Literal conversion for ids known at compile time. Panics on a malformed id;
/// use [`NodeId::new`] for untrusted input.
impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl TryFrom<String> for NodeId {
    type Error = InvalidId;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        NodeId::new(&s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0.to_string()
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for NodeId {
    fn eq(&self, other: &str) -> bool {
        &*self.0 == other
    }
}

impl PartialEq<&str> for NodeId {
    fn eq(&self, other: &&str) -> bool {
        &*self.0 == *other
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}
