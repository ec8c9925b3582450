#![allow(dead_code)]

use std::collections::BTreeMap;

use choreo::effect::pure;
use choreo::{locally, mdo, Choreo, Located, LocationId, NetworkEvent};
use choreo_examples::kvs::{kvs, ReplicationStrategy, Request, Response, StoreState, CLIENT};

/// Issue `requests` from the client one after another, collecting responses there.
pub fn issue<S>(
    requests: Vec<Request>,
    states: S,
    strategy: ReplicationStrategy<S>,
) -> Choreo<Located<Vec<Response>>>
where
    S: Clone + Send + 'static,
{
    issue_from(requests, 0, Vec::new(), states, strategy)
}

fn issue_from<S>(
    requests: Vec<Request>,
    i: usize,
    done: Vec<Located<Response>>,
    states: S,
    strategy: ReplicationStrategy<S>,
) -> Choreo<Located<Vec<Response>>>
where
    S: Clone + Send + 'static,
{
    if i == requests.len() {
        return locally(CLIENT, move |un| {
            done.iter().map(|r| un.unwrap(r).clone()).collect()
        });
    }
    let r = requests[i].clone();
    mdo! {
        request <- locally(CLIENT, move |_| r);
        response <- kvs(&request, &states, strategy);
        let mut done = done;
        let _ = done.push(response);
        issue_from(requests, i + 1, done, states, strategy)
    }
}

pub fn at<T>(loc: &str, v: T) -> Located<T> {
    Located::wrap(v, loc)
}

pub fn store_at(loc: &str, s: &StoreState) -> Located<StoreState> {
    Located::wrap(s.clone(), loc)
}

/// Responses of a single plain map, the reference for any strategy.
pub fn reference(requests: &[Request]) -> Vec<Response> {
    let mut map = BTreeMap::new();
    requests
        .iter()
        .map(|r| match r {
            Request::Put(k, v) => {
                map.insert(k.clone(), v.clone());
                Some(v.clone())
            }
            Request::Get(k) => map.get(k).cloned(),
        })
        .collect()
}

/// Rename locations in a trace.
pub fn rename(events: &[NetworkEvent], from: &str, to: &str) -> Vec<NetworkEvent> {
    let swap = |l: &LocationId| {
        if *l == from {
            LocationId::from(to)
        } else {
            l.clone()
        }
    };
    events
        .iter()
        .map(|e| match e {
            NetworkEvent::Run => NetworkEvent::Run,
            NetworkEvent::Send { to } => NetworkEvent::Send { to: swap(to) },
            NetworkEvent::Recv { from } => NetworkEvent::Recv { from: swap(from) },
            NetworkEvent::Broadcast { recipients } => NetworkEvent::Broadcast {
                recipients: recipients.iter().map(swap).collect(),
            },
        })
        .collect()
}

pub fn unit() -> Choreo<()> {
    pure(())
}
