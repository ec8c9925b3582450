//! The canonical wire encoding: compact UTF-8 JSON.
//!
//! Integers are JSON numbers, strings are JSON strings, `Option` is `null` or
//! the inner value, and sum types use `{"tag": ..., "fields": [...]}` (see the
//! key-value store's `Request` for a hand-written instance).

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt;

/// Types that can cross the network: anything with a canonical encoding.
pub trait Wire: Serialize + DeserializeOwned + Send + 'static {}

impl<T: Serialize + DeserializeOwned + Send + 'static> Wire for T {}

/// An encoded message body.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Encoded(Vec<u8>);

impl Encoded {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Encoded(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Encoded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match std::str::from_utf8(&self.0) {
            Ok(s) => write!(f, "Encoded({s})"),
            Err(_) => write!(f, "Encoded({:?})", self.0),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{direction} `{type_name}`: {source}")]
pub struct CodecError {
    direction: &'static str,
    type_name: &'static str,
    #[source]
    source: serde_json::Error,
}

pub fn encode<T: Serialize + ?Sized>(value: &T) -> Result<Encoded, CodecError> {
    serde_json::to_vec(value)
        .map(Encoded)
        .map_err(|source| CodecError {
            direction: "cannot encode",
            type_name: std::any::type_name::<T>(),
            source,
        })
}

pub fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CodecError> {
    serde_json::from_slice(bytes).map_err(|source| CodecError {
        direction: "cannot decode",
        type_name: std::any::type_name::<T>(),
        source,
    })
}

/// Whether `bytes` is a well-formed message body of any type.
pub fn is_well_formed(bytes: &[u8]) -> bool {
    serde_json::from_slice::<serde::de::IgnoredAny>(bytes).is_ok()
}
