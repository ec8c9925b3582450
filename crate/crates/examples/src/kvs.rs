//! A replicated key-value store.
//!
//! A client sends requests to a primary, which answers them from its own
//! store. A [`ReplicationStrategy`] decides what else happens on the server
//! side before the primary answers: nothing ([`null_strategy`]), or forwarding
//! updates to one or two backups that apply them first ([`primary_backup`],
//! [`double_backup`]).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, MutexGuard};

use choreo::effect::pure;
use choreo::{comm, comm_locally, cond, locally, mdo, Choreo, Located, LocationId};
use serde::{Deserialize, Serialize};

use crate::show::show_maybe_string;

pub const CLIENT: &str = "client";
pub const SERVER: &str = "server";
pub const PRIMARY: &str = "primary";
pub const BACKUP: &str = "backup";
pub const BACKUP1: &str = "backup1";
pub const BACKUP2: &str = "backup2";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Tagged", try_from = "Tagged")]
pub enum Request {
    Put(String, String),
    Get(String),
}

/// Wire form of a [`Request`]: `{"tag": "Put", "fields": [key, value]}`.
#[derive(Serialize, Deserialize)]
struct Tagged {
    tag: String,
    fields: Vec<String>,
}

impl From<Request> for Tagged {
    fn from(r: Request) -> Self {
        match r {
            Request::Put(k, v) => Tagged {
                tag: "Put".into(),
                fields: vec![k, v],
            },
            Request::Get(k) => Tagged {
                tag: "Get".into(),
                fields: vec![k],
            },
        }
    }
}

impl TryFrom<Tagged> for Request {
    type Error = String;

    fn try_from(t: Tagged) -> Result<Self, String> {
        let mut fields = t.fields.into_iter();
        let request = match (t.tag.as_str(), fields.next(), fields.next()) {
            ("Put", Some(k), Some(v)) => Request::Put(k, v),
            ("Get", Some(k), None) => Request::Get(k),
            (tag, ..) => return Err(format!("malformed request with tag `{tag}`")),
        };
        match fields.next() {
            None => Ok(request),
            Some(_) => Err("too many request fields".into()),
        }
    }
}

pub type Response = Option<String>;

/// One replica's store. Cloning shares the underlying map.
#[derive(Debug, Clone, Default)]
pub struct StoreState(Arc<Mutex<BTreeMap<String, String>>>);

impl StoreState {
    pub fn new() -> Self {
        StoreState::default()
    }

    fn lock(&self) -> MutexGuard<'_, BTreeMap<String, String>> {
        self.0.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.lock().clone()
    }
}

pub fn handle_request(request: &Request, state: &StoreState) -> Response {
    match request {
        Request::Put(k, v) => {
            state.lock().insert(k.clone(), v.clone());
            Some(v.clone())
        }
        Request::Get(k) => state.lock().get(k).cloned(),
    }
}

/// How the server side processes a request that has reached the primary.
/// The response it returns is located at the primary.
pub type ReplicationStrategy<S> = fn(Located<Request>, &S) -> Choreo<Located<Response>>;

/// One round trip: the client's request goes to the primary, the strategy
/// handles it, and the primary's response comes back.
pub fn kvs<S>(
    request: &Located<Request>,
    states: &S,
    strategy: ReplicationStrategy<S>,
) -> Choreo<Located<Response>>
where
    S: Clone + Send + 'static,
{
    let states = states.clone();
    mdo! {
        request <- comm(CLIENT, request, PRIMARY);
        response <- strategy(request, &states);
        comm(PRIMARY, &response, CLIENT)
    }
}

/// The unreplicated store with a single `server`, without strategies.
pub fn kvs_client_server(
    request: &Located<Request>,
    state: &Located<StoreState>,
) -> Choreo<Located<Response>> {
    let state = state.clone();
    mdo! {
        request <- comm(CLIENT, request, SERVER);
        response <- locally(SERVER, move |un| handle_request(un.unwrap(&request), un.unwrap(&state)));
        comm(SERVER, &response, CLIENT)
    }
}

fn apply_at_primary(
    request: Located<Request>,
    state: &Located<StoreState>,
) -> Choreo<Located<Response>> {
    let state = state.clone();
    locally(PRIMARY, move |un| {
        handle_request(un.unwrap(&request), un.unwrap(&state))
    })
}

/// The primary handles every request alone.
pub fn null_strategy(
    request: Located<Request>,
    state: &Located<StoreState>,
) -> Choreo<Located<Response>> {
    apply_at_primary(request, state)
}

/// Updates go to `backup` and are acknowledged before the primary applies them.
pub fn primary_backup(
    request: Located<Request>,
    (primary_state, backup_state): &(Located<StoreState>, Located<StoreState>),
) -> Choreo<Located<Response>> {
    let primary_state = primary_state.clone();
    let backup_state = backup_state.clone();
    let forwarded = request.clone();
    mdo! {
        cond(PRIMARY, &request, move |r: Request| -> Choreo<()> {
            match r {
                Request::Put(..) => mdo! {
                    req <- comm(PRIMARY, &forwarded, BACKUP);
                    _ack <- comm_locally(BACKUP, move |un| handle_request(un.unwrap(&req), un.unwrap(&backup_state)), PRIMARY);
                    pure(())
                },
                Request::Get(_) => pure(()),
            }
        });
        apply_at_primary(request, &primary_state)
    }
}

/// Two backups, each updated with [`do_backup`] before the primary applies
/// the request.
pub fn double_backup(
    request: Located<Request>,
    (primary_state, backup1_state, backup2_state): &(
        Located<StoreState>,
        Located<StoreState>,
        Located<StoreState>,
    ),
) -> Choreo<Located<Response>> {
    let first = do_backup(PRIMARY, BACKUP1, &request, backup1_state).expect("distinct locations");
    let second = do_backup(PRIMARY, BACKUP2, &request, backup2_state).expect("distinct locations");
    let primary_state = primary_state.clone();
    mdo! {
        first;
        second;
        apply_at_primary(request, &primary_state)
    }
}

/// [`primary_backup`] written with [`do_backup`].
pub fn primary_backup_via_do_backup(
    request: Located<Request>,
    (primary_state, backup_state): &(Located<StoreState>, Located<StoreState>),
) -> Choreo<Located<Response>> {
    let backup = do_backup(PRIMARY, BACKUP, &request, backup_state).expect("distinct locations");
    let primary_state = primary_state.clone();
    mdo! {
        backup;
        apply_at_primary(request, &primary_state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` cannot back itself up")]
pub struct SameLocation(pub LocationId);

/// If `request` (at `loc_a`) is an update, forward it to `loc_b`, apply it to
/// `state` there, and acknowledge back to `loc_a`.
pub fn do_backup(
    loc_a: impl Into<LocationId>,
    loc_b: impl Into<LocationId>,
    request: &Located<Request>,
    state: &Located<StoreState>,
) -> Result<Choreo<()>, SameLocation> {
    let (loc_a, loc_b) = (loc_a.into(), loc_b.into());
    if loc_a == loc_b {
        return Err(SameLocation(loc_a));
    }
    let forwarded = request.clone();
    let state = state.clone();
    Ok(cond(loc_a.clone(), request, move |r: Request| match r {
        Request::Put(..) => mdo! {
            req <- comm(loc_a.clone(), &forwarded, loc_b.clone());
            _ack <- comm_locally(loc_b, move |un| handle_request(un.unwrap(&req), un.unwrap(&state)), loc_a);
            pure(())
        },
        Request::Get(_) => pure(()),
    }))
}

/// A line the client typed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Request(Request),
    Quit,
}

/// Parse `GET key`, `PUT key value` (the value is the rest of the line), or `QUIT`.
pub fn parse_command(line: &str) -> Result<Command, String> {
    let line = line.trim_end_matches(['\r', '\n']);
    let (word, rest) = line.split_once(' ').unwrap_or((line, ""));
    match word {
        "QUIT" if rest.is_empty() => Ok(Command::Quit),
        "GET" if !rest.is_empty() && !rest.contains(' ') => {
            Ok(Command::Request(Request::Get(rest.into())))
        }
        "PUT" => match rest.split_once(' ') {
            Some((k, v)) if !k.is_empty() => Ok(Command::Request(Request::Put(k.into(), v.into()))),
            _ => Err(format!("usage: PUT <key> <value>, got `{line}`")),
        },
        _ => Err(format!(
            "expected GET <key>, PUT <key> <value> or QUIT, got `{line}`"
        )),
    }
}

/// The client's terminal.
#[derive(Clone)]
pub struct Terminal {
    input: Arc<Mutex<dyn BufRead + Send>>,
    output: Arc<Mutex<dyn Write + Send>>,
    errors: Arc<Mutex<dyn Write + Send>>,
}

impl Terminal {
    pub fn new(
        input: impl BufRead + Send + 'static,
        output: impl Write + Send + 'static,
        errors: impl Write + Send + 'static,
    ) -> Self {
        Terminal {
            input: Arc::new(Mutex::new(input)),
            output: Arc::new(Mutex::new(output)),
            errors: Arc::new(Mutex::new(errors)),
        }
    }

    /// A terminal with no input that discards output.
    pub fn closed() -> Self {
        Terminal::new(std::io::empty(), std::io::sink(), std::io::sink())
    }

    /// Read until a valid request. `None` on end of input or `QUIT`;
    /// unparseable lines are reported and skipped.
    pub fn read_request(&self) -> Option<Request> {
        let mut input = self.input.lock().unwrap_or_else(|p| p.into_inner());
        loop {
            let mut line = String::new();
            match input.read_line(&mut line) {
                Ok(0) | Err(_) => return None,
                Ok(_) => {}
            }
            if line.trim().is_empty() {
                continue;
            }
            match parse_command(&line) {
                Ok(Command::Request(r)) => return Some(r),
                Ok(Command::Quit) => return None,
                Err(e) => {
                    let mut errors = self.errors.lock().unwrap_or_else(|p| p.into_inner());
                    let _ = writeln!(errors, "{e}");
                }
            }
        }
    }

    pub fn print_response(&self, response: &Response) {
        let mut output = self.output.lock().unwrap_or_else(|p| p.into_inner());
        let _ = writeln!(output, "> {}", show_maybe_string(response));
        let _ = output.flush();
    }
}

/// Serve the client's terminal until it closes, using `strategy` for every
/// request. Every location learns when the client is done.
pub fn serve<S>(terminal: Terminal, states: S, strategy: ReplicationStrategy<S>) -> Choreo<()>
where
    S: Clone + Send + 'static,
{
    let reader = terminal.clone();
    mdo! {
        next <- locally(CLIENT, move |_| reader.read_request());
        more <- locally(CLIENT, {
            let next = next.clone();
            move |un| un.unwrap(&next).is_some()
        });
        cond(CLIENT, &more, move |more: bool| {
            if !more {
                return pure(());
            }
            mdo! {
                request <- locally(CLIENT, move |un| un.unwrap(&next).clone().expect("checked above"));
                response <- kvs(&request, &states, strategy);
                let printer = terminal.clone();
                _ <- locally(CLIENT, move |un| printer.print_response(un.unwrap(&response)));
                serve(terminal, states, strategy)
            }
        })
    }
}

/// The store deployments the CLI knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replication {
    Null,
    PrimaryBackup,
    DoubleBackup,
}

impl Replication {
    pub fn locations(self) -> &'static [&'static str] {
        match self {
            Replication::Null => &[CLIENT, PRIMARY],
            Replication::PrimaryBackup => &[CLIENT, PRIMARY, BACKUP],
            Replication::DoubleBackup => &[CLIENT, PRIMARY, BACKUP1, BACKUP2],
        }
    }

    /// Start with empty stores at every replica, then [`serve`].
    pub fn session(self, terminal: Terminal) -> Choreo<()> {
        let fresh = |at: &'static str| locally(at, |_| StoreState::new());
        match self {
            Replication::Null => fresh(PRIMARY).bind(move |p| serve(terminal, p, null_strategy)),
            Replication::PrimaryBackup => mdo! {
                p <- fresh(PRIMARY);
                b <- fresh(BACKUP);
                serve(terminal, (p, b), primary_backup)
            },
            Replication::DoubleBackup => mdo! {
                p <- fresh(PRIMARY);
                b1 <- fresh(BACKUP1);
                b2 <- fresh(BACKUP2);
                serve(terminal, (p, b1, b2), double_backup)
            },
        }
    }
}
