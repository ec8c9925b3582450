//! An in-process transport: every location is a thread, every ordered pair of
//! locations has its own FIFO mailbox.
//!
//! Delivery can be delayed by a seeded random amount to shake out schedule
//! dependence. Delays only change when a message becomes visible, never the
//! order within a mailbox.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::choreo::Choreo;
use crate::codec::Encoded;
use crate::error::Error;
use crate::location::LocationId;
use crate::network::{run_network_observed, Backend, NetworkEvent, Transport};
use crate::projection::epp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayPolicy {
    /// Messages are visible to the receiver as soon as they are sent.
    #[default]
    Immediate,
    /// Each message becomes visible after a delay drawn uniformly from
    /// `0..=max`, using an RNG per sending location seeded from `seed`.
    Uniform { max: Duration, seed: u64 },
}

struct Mailbox {
    queue: Mutex<VecDeque<(Instant, Encoded)>>,
    ready: Condvar,
    delivered: AtomicUsize,
}

struct Fabric {
    locations: Vec<LocationId>,
    index: HashMap<LocationId, usize>,
    /// Indexed by `sender * n + receiver`.
    mailboxes: Vec<Mailbox>,
    delay: DelayPolicy,
    rngs: Vec<Mutex<ChaCha8Rng>>,
    aborted: Mutex<Option<String>>,
}

/// Shared state of an in-process run. Cheap to clone.
#[derive(Clone)]
pub struct LocalFabric {
    inner: Arc<Fabric>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl LocalFabric {
    pub fn new<I, L>(locations: I, delay: DelayPolicy) -> Result<Self, Error>
    where
        I: IntoIterator<Item = L>,
        L: Into<LocationId>,
    {
        let locations: Vec<LocationId> = locations.into_iter().map(Into::into).collect();
        if locations.is_empty() {
            return Err(Error::Config(
                "a local fabric needs at least one location".into(),
            ));
        }
        let mut index = HashMap::new();
        for (i, l) in locations.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate location `{l}`")));
            }
        }
        let n = locations.len();
        let mailboxes = (0..n * n)
            .map(|_| Mailbox {
                queue: Mutex::new(VecDeque::new()),
                ready: Condvar::new(),
                delivered: AtomicUsize::new(0),
            })
            .collect();
        let seed = match delay {
            DelayPolicy::Uniform { seed, .. } => seed,
            DelayPolicy::Immediate => 0,
        };
        let rngs = (0..n)
            .map(|i| {
                Mutex::new(ChaCha8Rng::seed_from_u64(
                    seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ))
            })
            .collect();
        Ok(LocalFabric {
            inner: Arc::new(Fabric {
                locations,
                index,
                mailboxes,
                delay,
                rngs,
                aborted: Mutex::new(None),
            }),
        })
    }

    fn slot(&self, from: &LocationId, to: &LocationId) -> Result<usize, Error> {
        let idx = |l: &LocationId| {
            self.inner
                .index
                .get(l)
                .copied()
                .ok_or_else(|| Error::UnknownLocation(l.clone()))
        };
        Ok(idx(from)? * self.inner.locations.len() + idx(to)?)
    }

    /// Number of mailboxes, one per ordered pair of locations.
    pub fn mailbox_count(&self) -> usize {
        self.inner.mailboxes.len()
    }

    /// Messages from `from` to `to` not yet received.
    pub fn pending(&self, from: &LocationId, to: &LocationId) -> Result<usize, Error> {
        let slot = self.slot(from, to)?;
        Ok(lock(&self.inner.mailboxes[slot].queue).len())
    }

    /// Messages from `from` to `to` received so far.
    pub fn delivered(&self, from: &LocationId, to: &LocationId) -> Result<usize, Error> {
        let slot = self.slot(from, to)?;
        Ok(self.inner.mailboxes[slot].delivered.load(Ordering::SeqCst))
    }

    /// Whether every mailbox is empty.
    pub fn is_quiescent(&self) -> bool {
        self.inner
            .mailboxes
            .iter()
            .all(|m| lock(&m.queue).is_empty())
    }

    /// Wake every blocked receiver with an error. Used when one endpoint fails
    /// so the others do not wait forever.
    pub fn abort(&self, reason: impl Into<String>) {
        {
            let mut aborted = lock(&self.inner.aborted);
            if aborted.is_none() {
                *aborted = Some(reason.into());
            }
        }
        for m in &self.inner.mailboxes {
            let _guard = lock(&m.queue);
            m.ready.notify_all();
        }
    }

    fn abort_reason(&self) -> Option<String> {
        lock(&self.inner.aborted).clone()
    }

    fn delay_for(&self, sender: usize) -> Duration {
        match self.inner.delay {
            DelayPolicy::Immediate => Duration::ZERO,
            DelayPolicy::Uniform { max, .. } => {
                let micros = max.as_micros() as u64;
                Duration::from_micros(lock(&self.inner.rngs[sender]).gen_range(0..=micros))
            }
        }
    }
}

impl Backend for LocalFabric {
    type Endpoint = LocalEndpoint;

    fn locations(&self) -> Vec<LocationId> {
        self.inner.locations.clone()
    }

    fn endpoint(&self, me: &LocationId) -> Result<LocalEndpoint, Error> {
        let index = *self
            .inner
            .index
            .get(me)
            .ok_or_else(|| Error::UnknownLocation(me.clone()))?;
        Ok(LocalEndpoint {
            fabric: self.clone(),
            me: me.clone(),
            index,
        })
    }

    fn contains(&self, location: &LocationId) -> bool {
        self.inner.index.contains_key(location)
    }
}

pub struct LocalEndpoint {
    fabric: LocalFabric,
    me: LocationId,
    index: usize,
}

impl Transport for LocalEndpoint {
    fn send(&mut self, to: &LocationId, payload: &Encoded) -> Result<(), Error> {
        let slot = self.fabric.slot(&self.me, to)?;
        let delay = self.fabric.delay_for(self.index);
        let mailbox = &self.fabric.inner.mailboxes[slot];
        let mut queue = lock(&mailbox.queue);
        let mut visible = Instant::now() + delay;
        if let Some((last, _)) = queue.back() {
            visible = visible.max(*last);
        }
        queue.push_back((visible, payload.clone()));
        mailbox.ready.notify_all();
        Ok(())
    }

    fn recv(&mut self, from: &LocationId) -> Result<Encoded, Error> {
        let slot = self.fabric.slot(from, &self.me)?;
        let mailbox = &self.fabric.inner.mailboxes[slot];
        let mut queue = lock(&mailbox.queue);
        loop {
            if let Some(reason) = self.fabric.abort_reason() {
                return Err(Error::Aborted(reason));
            }
            let now = Instant::now();
            match queue.front() {
                Some((visible, _)) if *visible <= now => {
                    let (_, msg) = queue.pop_front().expect("front exists");
                    mailbox.delivered.fetch_add(1, Ordering::SeqCst);
                    return Ok(msg);
                }
                Some((visible, _)) => {
                    let wait = *visible - now;
                    queue = mailbox
                        .ready
                        .wait_timeout(queue, wait)
                        .unwrap_or_else(|p| p.into_inner())
                        .0;
                }
                None => {
                    queue = mailbox.ready.wait(queue).unwrap_or_else(|p| p.into_inner());
                }
            }
        }
    }
}

/// Per-location outcome of [`run_all_traced`].
#[derive(Debug)]
pub struct EndpointRun<A> {
    pub result: A,
    pub events: Vec<NetworkEvent>,
}

/// Run the projection of a choreography at every fabric location concurrently.
///
/// `factory` builds the choreography once per location (choreographies are
/// consumed by running them). If any endpoint fails, the others are woken and
/// the failure of the first real culprit is reported.
pub fn run_all<A, F>(fabric: &LocalFabric, factory: F) -> Result<BTreeMap<LocationId, A>, Error>
where
    A: Send + 'static,
    F: Fn() -> Choreo<A> + Sync,
{
    Ok(run_all_traced(fabric, factory)?
        .into_iter()
        .map(|(l, run)| (l, run.result))
        .collect())
}

/// [`run_all`], also recording the network events of every location.
pub fn run_all_traced<A, F>(
    fabric: &LocalFabric,
    factory: F,
) -> Result<BTreeMap<LocationId, EndpointRun<A>>, Error>
where
    A: Send + 'static,
    F: Fn() -> Choreo<A> + Sync,
{
    let locations = fabric.locations();
    let outcomes: Vec<(LocationId, Result<EndpointRun<A>, Error>)> = thread::scope(|s| {
        let handles: Vec<_> = locations
            .iter()
            .map(|loc| {
                let factory = &factory;
                let fabric = fabric.clone();
                let me = loc.clone();
                let handle = s.spawn(move || {
                    let loc = me;
                    let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
                        let mut events = Vec::new();
                        let program = epp(factory(), loc.clone());
                        run_network_observed(&fabric, &loc, program, |e| events.push(e.clone()))
                            .map(|result| EndpointRun { result, events })
                    }));
                    let outcome = match outcome {
                        Ok(r) => r,
                        Err(payload) => Err(Error::EndpointFailed {
                            location: loc.clone(),
                            message: panic_message(payload.as_ref()),
                        }),
                    };
                    if let Err(e) = &outcome {
                        if !matches!(e, Error::Aborted(_)) {
                            fabric.abort(format!("location `{loc}` failed: {e}"));
                        }
                    }
                    outcome
                });
                (loc.clone(), handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(loc, h)| {
                let r = h.join().unwrap_or_else(|p| {
                    Err(Error::EndpointFailed {
                        location: loc.clone(),
                        message: panic_message(p.as_ref()),
                    })
                });
                (loc, r)
            })
            .collect()
    });

    let mut results = BTreeMap::new();
    let mut aborted = None;
    let mut seen = HashSet::new();
    for (loc, outcome) in outcomes {
        seen.insert(loc.clone());
        match outcome {
            Ok(run) => {
                results.insert(loc, run);
            }
            Err(Error::Aborted(reason)) => aborted = aborted.or(Some(reason)),
            Err(e @ Error::EndpointFailed { .. }) => return Err(e),
            Err(e) => {
                return Err(Error::EndpointFailed {
                    location: loc,
                    message: e.to_string(),
                })
            }
        }
    }
    match aborted {
        Some(reason) => Err(Error::Aborted(reason)),
        None => Ok(results),
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panicked".to_string()
    }
}
