//! Per-location network programs and the backend interface that runs them.
//!
//! A [`Network`] program is what one participant actually executes: local
//! computation plus explicit sends, receives, and broadcasts. Projection
//! produces these; a [`Backend`] supplies the transport.

use std::fmt;

use crate::codec::{self, CodecError, Encoded, Wire};
use crate::effect::{Program, Step, Value};
use crate::error::{Error, LocalError};
use crate::location::LocationId;

pub type Network<A> = Program<NetworkEffect, A>;

/// Turns a received body into the value the continuation expects.
pub type Decoder = fn(&[u8]) -> Result<Value, CodecError>;

pub enum NetworkEffect {
    Run(Box<dyn FnOnce() -> Result<Value, LocalError> + Send>),
    Send {
        payload: Encoded,
        to: LocationId,
    },
    /// Dequeue the next message from `from`, decoded at the handler boundary.
    Recv {
        from: LocationId,
        decode: Decoder,
    },
    /// Send to every other configured location.
    Broadcast {
        payload: Encoded,
    },
}

/// What a network program did, as seen by an observer of [`run_network_observed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetworkEvent {
    Run,
    Send { to: LocationId },
    Recv { from: LocationId },
    Broadcast { recipients: Vec<LocationId> },
}

impl NetworkEvent {
    /// Point-to-point messages this event put on the wire.
    pub fn messages_sent(&self) -> usize {
        match self {
            NetworkEvent::Send { .. } => 1,
            NetworkEvent::Broadcast { recipients } => recipients.len(),
            _ => 0,
        }
    }
}

impl fmt::Debug for NetworkEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkEffect::Run(_) => f.write_str("Run"),
            NetworkEffect::Send { payload, to } => write!(f, "Send({payload:?}, {to})"),
            NetworkEffect::Recv { from, .. } => write!(f, "Recv({from})"),
            NetworkEffect::Broadcast { payload } => write!(f, "Broadcast({payload:?})"),
        }
    }
}

fn raw_decoder(bytes: &[u8]) -> Result<Value, CodecError> {
    Ok(Box::new(Encoded::from_bytes(bytes.to_vec())))
}

pub fn run<T, F>(computation: F) -> Network<T>
where
    T: Send + 'static,
    F: FnOnce() -> T + Send + 'static,
{
    try_run(move || Ok::<_, LocalError>(computation()))
}

pub fn try_run<T, E, F>(computation: F) -> Network<T>
where
    T: Send + 'static,
    E: Into<LocalError>,
    F: FnOnce() -> Result<T, E> + Send + 'static,
{
    Program::perform(NetworkEffect::Run(Box::new(move || {
        computation()
            .map(|t| Box::new(t) as Value)
            .map_err(Into::into)
    })))
}

pub fn send(payload: Encoded, to: impl Into<LocationId>) -> Network<()> {
    Program::perform(NetworkEffect::Send {
        payload,
        to: to.into(),
    })
}

/// Receive the next message from `from`, undecoded.
pub fn recv(from: impl Into<LocationId>) -> Network<Encoded> {
    Program::perform(NetworkEffect::Recv {
        from: from.into(),
        decode: raw_decoder,
    })
}

/// Receive the next message from `from` as a `T`.
pub fn recv_value<T: Wire>(from: impl Into<LocationId>) -> Network<T> {
    Program::perform(NetworkEffect::Recv {
        from: from.into(),
        decode: |bytes| codec::decode::<T>(bytes).map(|t| Box::new(t) as Value),
    })
}

pub fn broadcast(payload: Encoded) -> Network<()> {
    Program::perform(NetworkEffect::Broadcast { payload })
}

/// Moves messages for one location.
pub trait Transport {
    /// Deliver `payload` into `to`'s queue for messages from this location.
    fn send(&mut self, to: &LocationId, payload: &Encoded) -> Result<(), Error>;

    /// Block until a message from `from` is available and dequeue it.
    fn recv(&mut self, from: &LocationId) -> Result<Encoded, Error>;
}

/// A configuration mapping locations to a transport.
pub trait Backend {
    type Endpoint: Transport;

    /// Every configured location, in a stable order.
    fn locations(&self) -> Vec<LocationId>;

    /// Attach to the transport as `me`.
    fn endpoint(&self, me: &LocationId) -> Result<Self::Endpoint, Error>;

    fn contains(&self, location: &LocationId) -> bool {
        self.locations().contains(location)
    }
}

/// Run `program` as location `me` over `backend`.
pub fn run_network<B, A>(backend: &B, me: &LocationId, program: Network<A>) -> Result<A, Error>
where
    B: Backend + ?Sized,
    A: Send + 'static,
{
    run_network_observed(backend, me, program, |_| {})
}

/// [`run_network`], reporting each effect to `observer` once it completes.
pub fn run_network_observed<B, A, O>(
    backend: &B,
    me: &LocationId,
    program: Network<A>,
    mut observer: O,
) -> Result<A, Error>
where
    B: Backend + ?Sized,
    A: Send + 'static,
    O: FnMut(&NetworkEvent),
{
    let locations = backend.locations();
    if !locations.contains(me) {
        return Err(Error::UnknownLocation(me.clone()));
    }
    let known = |l: &LocationId| {
        if locations.contains(l) {
            Ok(())
        } else {
            Err(Error::UnknownLocation(l.clone()))
        }
    };
    let mut endpoint = backend.endpoint(me)?;
    let mut program = program;
    loop {
        let (effect, k) = match program.step() {
            Step::Done(a) => return Ok(a),
            Step::Perform(effect, k) => (effect, k),
        };
        let (value, event): (Value, _) = match effect {
            NetworkEffect::Run(computation) => {
                let v = computation().map_err(|source| Error::Local {
                    location: me.clone(),
                    source,
                })?;
                (v, NetworkEvent::Run)
            }
            NetworkEffect::Send { payload, to } => {
                known(&to)?;
                endpoint.send(&to, &payload)?;
                (Box::new(()), NetworkEvent::Send { to })
            }
            NetworkEffect::Recv { from, decode } => {
                known(&from)?;
                let bytes = endpoint.recv(&from)?;
                (decode(bytes.as_bytes())?, NetworkEvent::Recv { from })
            }
            NetworkEffect::Broadcast { payload } => {
                let recipients: Vec<_> = locations.iter().filter(|l| *l != me).cloned().collect();
                for to in &recipients {
                    endpoint.send(to, &payload)?;
                }
                (Box::new(()), NetworkEvent::Broadcast { recipients })
            }
        };
        observer(&event);
        program = k.resume(value);
    }
}
