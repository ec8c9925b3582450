//! The global choreography language and its direct, single-process semantics.
//!
//! A [`Choreo`] describes what every participant does, from a global point of
//! view. It is built from four constructs:
//!
//! * [`locally`]: run a computation at one location;
//! * [`comm`]: move a value from one location to another;
//! * [`comm_locally`]: both at once;
//! * [`cond`]: branch on a value, with every location learning the choice.
//!
//! [`run_choreo`] executes a choreography in the current thread, ignoring
//! placement entirely. It is the reference the projected, distributed run
//! must agree with.
//!
//! Higher-order and location-polymorphic choreographies are plain Rust
//! functions that take choreographies or [`LocationId`]s and return a
//! `Choreo`. They must be fully applied before projection.

use std::any::type_name;
use std::fmt;

use crate::codec::{self, CodecError, Encoded, Wire};
use crate::effect::{downcast, ErasedProgram, Program, Step, Value};
use crate::error::{Error, LocalError};
use crate::location::{Located, LocationId, OwnershipError, Unwrap};

pub type Choreo<A> = Program<ChoreoEffect, A>;

/// Builds located results without knowing their type.
#[derive(Clone, Copy)]
pub(crate) struct LocatedOps {
    pub(crate) present: fn(Value, LocationId) -> Value,
    pub(crate) absent: fn() -> Value,
}

impl LocatedOps {
    fn of<T: Send + 'static>() -> Self {
        LocatedOps {
            present: |v, owner| Box::new(Located::wrap(downcast::<T>(v), owner)),
            absent: || Box::new(Located::<T>::Absent),
        }
    }
}

type LocalBody = Box<dyn FnOnce(&Unwrap) -> Result<Value, LocalError> + Send>;

/// A deferred computation to run at a single location.
pub struct LocalComputation {
    body: LocalBody,
    pub(crate) ops: LocatedOps,
}

impl LocalComputation {
    fn new<T, F>(body: F) -> Self
    where
        T: Send + 'static,
        F: FnOnce(&Unwrap) -> Result<T, LocalError> + Send + 'static,
    {
        LocalComputation {
            body: Box::new(move |un| body(un).map(|t| Box::new(t) as Value)),
            ops: LocatedOps::of::<T>(),
        }
    }

    pub(crate) fn run(self, cap: &Unwrap) -> Result<Value, LocalError> {
        (self.body)(cap)
    }
}

/// A located value that may be put on the wire, with its type erased.
pub struct Payload {
    located: Value,
    type_name: &'static str,
    take: fn(Value, &LocationId, &'static str) -> Result<Value, OwnershipError>,
    encode: fn(&Value) -> Result<Encoded, CodecError>,
    pub(crate) decode: fn(&[u8]) -> Result<Value, CodecError>,
    pub(crate) ops: LocatedOps,
}

impl Payload {
    fn new<T: Wire>(located: Located<T>) -> Self {
        Payload {
            located: Box::new(located),
            type_name: type_name::<T>(),
            take: |v, at, op| {
                downcast::<Located<T>>(v)
                    .into_owned_by(at, op)
                    .map(|t| Box::new(t) as Value)
            },
            encode: |v| codec::encode(v.downcast_ref::<T>().expect("payload type")),
            decode: |bytes| codec::decode::<T>(bytes).map(|t| Box::new(t) as Value),
            ops: LocatedOps::of::<T>(),
        }
    }

    /// Take the value out as `at`, which must own it.
    ///
    /// # Panics
    ///
    /// Panics with an ownership diagnostic otherwise.
    pub(crate) fn take_at(self, at: &LocationId, operation: &'static str) -> Value {
        match (self.take)(self.located, at, operation) {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }

    /// Take the value out as `at` and encode it for the wire.
    ///
    /// # Panics
    ///
    /// Panics on an ownership violation, or if the value's `Serialize` impl
    /// fails (a bug in that impl).
    pub(crate) fn take_encoded(self, at: &LocationId, operation: &'static str) -> (Encoded, Value) {
        let encode = self.encode;
        let value = self.take_at(at, operation);
        match encode(&value) {
            Ok(bytes) => (bytes, value),
            Err(e) => panic!("{e}"),
        }
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Payload")
            .field("type", &self.type_name)
            .finish()
    }
}

/// The continuation of a conditional, given the scrutinee.
pub struct Branches(Box<dyn FnOnce(Value) -> ErasedProgram<ChoreoEffect> + Send>);

impl Branches {
    pub(crate) fn select(self, scrutinee: Value) -> ErasedProgram<ChoreoEffect> {
        (self.0)(scrutinee)
    }
}

/// The effects a choreography can request.
pub enum ChoreoEffect {
    /// Run a computation at `at`; yields a value located there.
    Local {
        at: LocationId,
        computation: LocalComputation,
    },
    /// Copy a value owned by `sender` to `receiver`.
    Comm {
        sender: LocationId,
        payload: Payload,
        receiver: LocationId,
    },
    /// Branch on a value owned by `decider`; every location follows the branch.
    Cond {
        decider: LocationId,
        scrutinee: Payload,
        branches: Branches,
    },
}

/// What a [`ChoreoEffect`] was, without its payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChoreoEvent {
    Local {
        at: LocationId,
    },
    Comm {
        sender: LocationId,
        receiver: LocationId,
    },
    Cond {
        decider: LocationId,
    },
}

impl ChoreoEffect {
    pub fn event(&self) -> ChoreoEvent {
        match self {
            ChoreoEffect::Local { at, .. } => ChoreoEvent::Local { at: at.clone() },
            ChoreoEffect::Comm {
                sender, receiver, ..
            } => ChoreoEvent::Comm {
                sender: sender.clone(),
                receiver: receiver.clone(),
            },
            ChoreoEffect::Cond { decider, .. } => ChoreoEvent::Cond {
                decider: decider.clone(),
            },
        }
    }
}

impl fmt::Debug for ChoreoEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.event(), f)
    }
}

fn check_sender<T>(value: &Located<T>, sender: &LocationId, operation: &'static str) {
    if let Located::Present { owner, .. } = value {
        if owner != sender {
            panic!(
                "{}",
                OwnershipError {
                    accessor: sender.clone(),
                    owner: Some(owner.clone()),
                    operation,
                }
            );
        }
    }
}

/// Run `computation` at `at`. The result is located at `at`.
///
/// The computation receives an [`Unwrap`] capability for reading other values
/// located at `at`.
pub fn locally<T, F>(at: impl Into<LocationId>, computation: F) -> Choreo<Located<T>>
where
    T: Send + 'static,
    F: FnOnce(&Unwrap) -> T + Send + 'static,
{
    try_locally(at, move |un| Ok::<_, LocalError>(computation(un)))
}

/// Like [`locally`], for computations that can fail. A failure aborts the run
/// at that location.
pub fn try_locally<T, E, F>(at: impl Into<LocationId>, computation: F) -> Choreo<Located<T>>
where
    T: Send + 'static,
    E: Into<LocalError>,
    F: FnOnce(&Unwrap) -> Result<T, E> + Send + 'static,
{
    Program::perform(ChoreoEffect::Local {
        at: at.into(),
        computation: LocalComputation::new(move |un| computation(un).map_err(Into::into)),
    })
}

/// Send `value` from `sender` to `receiver`; the result is located at `receiver`.
///
/// Sending to oneself is allowed and is just a copy.
///
/// # Panics
///
/// Panics if `value` is present but owned by a location other than `sender`.
pub fn comm<T: Wire + Clone>(
    sender: impl Into<LocationId>,
    value: &Located<T>,
    receiver: impl Into<LocationId>,
) -> Choreo<Located<T>> {
    let sender = sender.into();
    check_sender(value, &sender, "comm");
    Program::perform(ChoreoEffect::Comm {
        sender,
        payload: Payload::new(value.clone()),
        receiver: receiver.into(),
    })
}

/// Compute at `sender` and send the result to `receiver`.
pub fn comm_locally<T, F>(
    sender: impl Into<LocationId>,
    computation: F,
    receiver: impl Into<LocationId>,
) -> Choreo<Located<T>>
where
    T: Wire + Clone,
    F: FnOnce(&Unwrap) -> T + Send + 'static,
{
    let sender = sender.into();
    let receiver = receiver.into();
    locally(sender.clone(), computation).bind(move |x| comm(sender, &x, receiver))
}

/// Branch on `scrutinee`, owned by `decider`.
///
/// Every location learns the scrutinee's value and continues with the same
/// branch, so locations whose behaviour depends on the choice stay in step.
///
/// # Panics
///
/// Panics if `scrutinee` is present but owned by a location other than `decider`.
pub fn cond<S, B, F>(
    decider: impl Into<LocationId>,
    scrutinee: &Located<S>,
    branches: F,
) -> Choreo<B>
where
    S: Wire + Clone,
    B: Send + 'static,
    F: FnOnce(S) -> Choreo<B> + Send + 'static,
{
    let decider = decider.into();
    check_sender(scrutinee, &decider, "cond");
    Program::perform(ChoreoEffect::Cond {
        decider,
        scrutinee: Payload::new(scrutinee.clone()),
        branches: Branches(Box::new(move |v| branches(downcast::<S>(v)).erase())),
    })
}

/// Run a choreography in this thread as one program.
///
/// Local computations run in program order, communication returns the value
/// at its new owner, and a conditional continues with the chosen branch.
pub fn run_choreo<A: Send + 'static>(choreo: Choreo<A>) -> Result<A, Error> {
    run_choreo_observed(choreo, |_| {})
}

/// [`run_choreo`], reporting every effect to `observer` before it runs.
pub fn run_choreo_observed<A, O>(choreo: Choreo<A>, mut observer: O) -> Result<A, Error>
where
    A: Send + 'static,
    O: FnMut(&ChoreoEvent),
{
    let mut program = choreo;
    loop {
        let (effect, k) = match program.step() {
            Step::Done(a) => return Ok(a),
            Step::Perform(effect, k) => (effect, k),
        };
        observer(&effect.event());
        program = match effect {
            ChoreoEffect::Local { at, computation } => {
                let ops = computation.ops;
                let value = computation
                    .run(&Unwrap::new(at.clone()))
                    .map_err(|source| Error::Local {
                        location: at.clone(),
                        source,
                    })?;
                k.resume((ops.present)(value, at))
            }
            ChoreoEffect::Comm {
                sender,
                payload,
                receiver,
            } => {
                let ops = payload.ops;
                let value = payload.take_at(&sender, "comm");
                k.resume((ops.present)(value, receiver))
            }
            ChoreoEffect::Cond {
                decider,
                scrutinee,
                branches,
            } => {
                let value = scrutinee.take_at(&decider, "cond");
                k.resume_after(branches.select(value))
            }
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::pure;
    use crate::mdo;

    fn trace<A: Send + 'static>(c: Choreo<A>) -> (A, Vec<ChoreoEvent>) {
        let mut events = Vec::new();
        let out = run_choreo_observed(c, |e| events.push(e.clone())).unwrap();
        (out, events)
    }

    #[test]
    fn locally_wraps_at_location() {
        assert_eq!(
            run_choreo(locally("l", |_| 0)).unwrap(),
            Located::wrap(0, "l")
        );
        let store = run_choreo(locally("server", |_| {
            std::collections::BTreeMap::<String, String>::new()
        }))
        .unwrap();
        assert_eq!(store, Located::wrap(Default::default(), "server"));
    }

    #[test]
    fn locally_reads_own_values() {
        let c = mdo! {
            title <- locally("seller", |_| "TAPL".to_string());
            locally("seller", move |un| un.unwrap(&title).len())
        };
        assert_eq!(run_choreo(c).unwrap(), Located::wrap(4, "seller"));
    }

    #[test]
    fn comm_rebinds_owner() {
        let c = comm(
            "buyer",
            &Located::wrap("TAPL".to_string(), "buyer"),
            "seller",
        );
        assert_eq!(
            run_choreo(c).unwrap(),
            Located::wrap("TAPL".to_string(), "seller")
        );
        let self_send = comm("l", &Located::wrap(5, "l"), "l");
        assert_eq!(run_choreo(self_send).unwrap(), Located::wrap(5, "l"));
    }

    #[test]
    #[should_panic(expected = "location `buyer` attempted to read a value it does not own")]
    fn comm_from_non_owner_fails_at_construction() {
        let _ = comm("buyer", &Located::wrap(3, "seller"), "x");
    }

    #[test]
    #[should_panic(expected = "location `a` attempted to read a value it does not own")]
    fn cond_on_foreign_scrutinee_fails_at_construction() {
        let _ = cond("a", &Located::wrap(true, "b"), |_| pure::<_, ()>(()));
    }

    #[test]
    fn comm_locally_is_local_then_comm() {
        let (out, events) = trace(comm_locally("l", |_| 1, "l"));
        assert_eq!(out, Located::wrap(1, "l"));
        assert_eq!(
            events,
            vec![
                ChoreoEvent::Local { at: "l".into() },
                ChoreoEvent::Comm {
                    sender: "l".into(),
                    receiver: "l".into()
                }
            ]
        );
        let expanded = locally("seller", |_| 30).bind(|x| comm("seller", &x, "buyer"));
        assert_eq!(
            trace(comm_locally("seller", |_| 30, "buyer")),
            trace(expanded)
        );
    }

    #[test]
    fn cond_runs_chosen_branch_only() {
        let branches = |b: bool| {
            if b {
                comm("buyer", &Located::wrap(1, "buyer"), "seller").map(|_| "yes")
            } else {
                pure("no")
            }
        };
        let (out, events) = trace(cond("buyer", &Located::wrap(true, "buyer"), branches));
        let (expected, expected_events) = trace(branches(true));
        assert_eq!(out, expected);
        assert_eq!(
            events[0],
            ChoreoEvent::Cond {
                decider: "buyer".into()
            }
        );
        assert_eq!(events[1..], expected_events[..]);
        let (out, events) = trace(cond("buyer", &Located::wrap(false, "buyer"), branches));
        assert_eq!((out, events.len()), ("no", 1));
    }

    #[test]
    fn local_failures_propagate() {
        let c = try_locally("l", |_| Err::<i32, _>("disk on fire"));
        match run_choreo(c) {
            Err(Error::Local { location, source }) => {
                assert_eq!(location, "l");
                assert_eq!(source.to_string(), "disk on fire");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pure_choreo() {
        assert_eq!(
            run_choreo(pure::<ChoreoEffect, Option<i32>>(None)).unwrap(),
            None
        );
    }

    #[test]
    fn recursive_loop_inside_cond_is_stack_safe() {
        fn countdown(n: u32) -> Choreo<u32> {
            locally("a", move |_| n).bind(move |x| {
                cond("a", &x, |n| {
                    if n == 0 {
                        pure(0)
                    } else {
                        countdown(n - 1).map(|r| r + 1)
                    }
                })
            })
        }
        assert_eq!(run_choreo(countdown(50_000)).unwrap(), 50_000);
    }
}
