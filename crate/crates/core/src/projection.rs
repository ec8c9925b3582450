//! Endpoint projection: a choreography, seen from one location.
//!
//! Projection walks the choreography effect by effect and emits what `me`
//! must do:
//!
//! | effect          | owner / sender / decider       | receiver           | elsewhere                    |
//! |-----------------|--------------------------------|--------------------|------------------------------|
//! | `locally(l, m)` | run `m`, result present        |                    | absent                       |
//! | `comm(s, v, r)` | send `v` to `r`, result absent | receive from `s`   | absent                       |
//! | `cond(l, v, k)` | broadcast `v`, continue `k(v)` |                    | receive `x`, continue `k(x)` |
//!
//! A `comm` from a location to itself is a local copy with no messages.
//!
//! Projection is lazy: the branch of a conditional is only projected once the
//! scrutinee is known, so the resulting [`Network`] program is produced while
//! it runs.

use crate::choreo::{Choreo, ChoreoEffect};
use crate::effect::{ErasedProgram, ErasedStep};
use crate::error::Error;
use crate::location::{LocationId, Unwrap};
use crate::network::{run_network, Backend, Network, NetworkEffect};

/// The network program `me` runs for `choreo`.
pub fn epp<A: Send + 'static>(choreo: Choreo<A>, me: impl Into<LocationId>) -> Network<A> {
    project(choreo.erase(), me.into()).downcast()
}

fn project(choreo: ErasedProgram<ChoreoEffect>, me: LocationId) -> ErasedProgram<NetworkEffect> {
    ErasedProgram::defer(move || match choreo.step() {
        ErasedStep::Done(v) => ErasedProgram::from_value(v),
        ErasedStep::Perform(effect, k) => {
            let next = me.clone();
            project_effect(effect, me).and_then(move |v| project(k.resume(v), next))
        }
    })
}

/// The network program for one choreography effect. Its result is the value
/// handed to the choreography's continuation.
fn project_effect(effect: ChoreoEffect, me: LocationId) -> ErasedProgram<NetworkEffect> {
    match effect {
        ChoreoEffect::Local { at, computation } => {
            let ops = computation.ops;
            if at == me {
                ErasedProgram::perform(NetworkEffect::Run(Box::new(move || {
                    let v = computation.run(&Unwrap::new(me.clone()))?;
                    Ok((ops.present)(v, me))
                })))
            } else {
                ErasedProgram::from_value((ops.absent)())
            }
        }
        ChoreoEffect::Comm {
            sender,
            payload,
            receiver,
        } => {
            let ops = payload.ops;
            if sender == me && receiver == me {
                let v = payload.take_at(&me, "comm");
                ErasedProgram::from_value((ops.present)(v, me))
            } else if sender == me {
                let (bytes, _) = payload.take_encoded(&me, "comm");
                ErasedProgram::perform(NetworkEffect::Send {
                    payload: bytes,
                    to: receiver,
                })
                .map_value(move |_| (ops.absent)())
            } else if receiver == me {
                ErasedProgram::perform(NetworkEffect::Recv {
                    from: sender,
                    decode: payload.decode,
                })
                .map_value(move |v| (ops.present)(v, me))
            } else {
                ErasedProgram::from_value((ops.absent)())
            }
        }
        ChoreoEffect::Cond {
            decider,
            scrutinee,
            branches,
        } => {
            if decider == me {
                let (bytes, value) = scrutinee.take_encoded(&me, "cond");
                ErasedProgram::perform(NetworkEffect::Broadcast { payload: bytes })
                    .and_then(move |_| project(branches.select(value), me))
            } else {
                ErasedProgram::perform(NetworkEffect::Recv {
                    from: decider,
                    decode: scrutinee.decode,
                })
                .and_then(move |v| project(branches.select(v), me))
            }
        }
    }
}

/// Project `choreo` to `me` and run it over `backend`.
pub fn run_choreography<B, A>(
    backend: &B,
    choreo: Choreo<A>,
    me: impl Into<LocationId>,
) -> Result<A, Error>
where
    B: Backend + ?Sized,
    A: Send + 'static,
{
    let me = me.into();
    if !backend.contains(&me) {
        return Err(Error::UnknownLocation(me));
    }
    run_network(backend, &me, epp(choreo, me.clone()))
}
