//! Gorn addresses for nodes inside elementary trees.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Path of 1-based child indices from the root of a tree. The empty path is
/// the root (written `eps`).
///
/// The derived ordering is the prefix/lexicographic order: a prefix precedes
/// its extensions and siblings are ordered by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeAddress(Vec<u32>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddressError {
    #[error("address component must be a positive integer, got `{0}`")]
    BadComponent(String),
    #[error("empty address string (use `eps` for the root)")]
    Empty,
}

impl NodeAddress {
    pub fn root() -> Self {
        NodeAddress(Vec::new())
    }

    pub fn new(path: Vec<u32>) -> Result<Self, AddressError> {
        if let Some(bad) = path.iter().find(|&&c| c == 0) {
            return Err(AddressError::BadComponent(bad.to_string()));
        }
        Ok(NodeAddress(path))
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// Address of the `i`-th daughter (1-based).
    pub fn child(&self, i: u32) -> Self {
        debug_assert!(i >= 1);
        let mut p = self.0.clone();
        p.push(i);
        NodeAddress(p)
    }

    pub fn is_prefix_of(&self, other: &NodeAddress) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("eps");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for NodeAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(AddressError::Empty);
        }
        if s == "eps" || s == "ε" {
            return Ok(NodeAddress::root());
        }
        let path = s
            .split(['.', '·'])
            .map(|c| match c.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(AddressError::BadComponent(c.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NodeAddress(path))
    }
}
