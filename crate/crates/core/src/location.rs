//! Location names and values pinned to a location.

use std::borrow::{Borrow, Cow};
use std::fmt;

/// The name of a participant. Compared exactly, case-sensitively.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocationId(Cow<'static, str>);

impl LocationId {
    /// A location named by a string literal, usable in `const` items.
    ///
    /// # Panics
    ///
    /// Panics if `name` is empty.
    pub const fn from_static(name: &'static str) -> Self {
        assert!(!name.is_empty(), "location names must be nonempty");
        LocationId(Cow::Borrowed(name))
    }

    pub fn new(name: impl Into<String>) -> Result<Self, EmptyLocationName> {
        let name = name.into();
        if name.is_empty() {
            Err(EmptyLocationName)
        } else {
            Ok(LocationId(Cow::Owned(name)))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("location names must be nonempty")]
pub struct EmptyLocationName;

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

impl Borrow<str> for LocationId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// # Panics
///
/// Panics on an empty string; use [`LocationId::new`] for untrusted input.
impl From<&str> for LocationId {
    fn from(name: &str) -> Self {
        LocationId::new(name).expect("location names must be nonempty")
    }
}

impl From<String> for LocationId {
    fn from(name: String) -> Self {
        LocationId::new(name).expect("location names must be nonempty")
    }
}

impl From<&LocationId> for LocationId {
    fn from(loc: &LocationId) -> Self {
        loc.clone()
    }
}

impl PartialEq<str> for LocationId {
    fn eq(&self, other: &str) -> bool {
        self.as_str() == other
    }
}

impl PartialEq<&str> for LocationId {
    fn eq(&self, other: &&str) -> bool {
        self.as_str() == *other
    }
}

/// A value owned by exactly one location.
///
/// Every participant holds the same program, but only the owner holds the
/// value; everyone else sees [`Located::Absent`]. Values are read through an
/// [`Unwrap`] capability, which is only handed out to code running at a
/// specific location.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Located<T> {
    Present { value: T, owner: LocationId },
    Absent,
}

impl<T> Located<T> {
    pub fn wrap(value: T, owner: impl Into<LocationId>) -> Self {
        Located::Present {
            value,
            owner: owner.into(),
        }
    }

    pub fn is_present(&self) -> bool {
        matches!(self, Located::Present { .. })
    }

    pub fn owner(&self) -> Option<&LocationId> {
        match self {
            Located::Present { owner, .. } => Some(owner),
            Located::Absent => None,
        }
    }

    /// This value as seen by `location`: unchanged at its owner, absent elsewhere.
    pub fn view_from(&self, location: &LocationId) -> Located<T>
    where
        T: Clone,
    {
        match self {
            Located::Present { owner, .. } if owner == location => self.clone(),
            _ => Located::Absent,
        }
    }

    pub(crate) fn check_owner(
        &self,
        accessor: &LocationId,
        operation: &'static str,
    ) -> Result<&T, OwnershipError> {
        match self {
            Located::Present { value, owner } if owner == accessor => Ok(value),
            other => Err(OwnershipError {
                accessor: accessor.clone(),
                owner: other.owner().cloned(),
                operation,
            }),
        }
    }

    pub(crate) fn into_owned_by(
        self,
        accessor: &LocationId,
        operation: &'static str,
    ) -> Result<T, OwnershipError> {
        match self {
            Located::Present { value, owner } if owner == *accessor => Ok(value),
            other => Err(OwnershipError {
                accessor: accessor.clone(),
                owner: other.owner().cloned(),
                operation,
            }),
        }
    }
}

/// A location tried to read a value it does not hold.
///
/// Choreographies built from the public API never trigger this; it signals a
/// misuse such as reading another location's value inside a local computation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("location `{accessor}` attempted to read a value it does not own (owner: {}, operation: {operation})", owner_label(.owner))]
pub struct OwnershipError {
    pub accessor: LocationId,
    pub owner: Option<LocationId>,
    pub operation: &'static str,
}

fn owner_label(owner: &Option<LocationId>) -> String {
    match owner {
        Some(o) => format!("`{o}`"),
        None => "unknown, value is absent here".to_string(),
    }
}

/// The right to read values located at one location.
///
/// Handed to local computations by the interpreter and the projector; there is
/// no public constructor.
#[derive(Debug)]
pub struct Unwrap {
    location: LocationId,
}

impl Unwrap {
    pub(crate) fn new(location: LocationId) -> Self {
        Unwrap { location }
    }

    /// Where the computation holding this capability runs.
    pub fn location(&self) -> &LocationId {
        &self.location
    }

    /// Read a value owned by this location.
    ///
    /// # Panics
    ///
    /// Panics if `located` is absent or owned elsewhere.
    pub fn unwrap<'a, T>(&self, located: &'a Located<T>) -> &'a T {
        match located.check_owner(&self.location, "unwrap") {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn try_unwrap<'a, T>(&self, located: &'a Located<T>) -> Result<&'a T, OwnershipError> {
        located.check_owner(&self.location, "unwrap")
    }
}
