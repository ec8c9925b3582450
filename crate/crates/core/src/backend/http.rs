//! HTTP transport: each location runs a small server with one inbox per sender.
//!
//! Wire protocol, one endpoint:
//!
//! ```text
//! POST /msg/{sender}            (sender percent-encoded as a path segment)
//! Content-Type: application/octet-stream
//!
//! <canonical encoding of the payload>
//! ```
//!
//! The receiver answers `200` with an empty body once the message is in the
//! sender's inbox, and `400` (nothing enqueued) for anything else. A sender
//! posts to a given receiver strictly one message at a time, which together
//! with acknowledge-after-enqueue gives per-sender FIFO order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::codec::{self, Encoded};
use crate::error::Error;
use crate::location::LocationId;
use crate::network::{Backend, Transport};

/// Everything but RFC 3986 unreserved characters.
const PATH_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

pub const CONTENT_TYPE: &str = "application/octet-stream";

/// How hard a sender tries to reach a peer that is not up yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub interval: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 30,
            interval: Duration::from_millis(100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerAddress {
    pub host: String,
    pub port: u16,
}

/// Location to `host:port` mapping for the HTTP backend.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    locations: Vec<(LocationId, PeerAddress)>,
    retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new<I, L, H>(entries: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (L, H, u16)>,
        L: Into<LocationId>,
        H: Into<String>,
    {
        let mut locations = Vec::new();
        let mut names = HashSet::new();
        let mut addresses = HashSet::new();
        for (loc, host, port) in entries {
            let loc = loc.into();
            let host = host.into();
            if port == 0 {
                return Err(Error::Config(format!(
                    "location `{loc}` has invalid port 0"
                )));
            }
            if host.is_empty() {
                return Err(Error::Config(format!("location `{loc}` has an empty host")));
            }
            if !names.insert(loc.clone()) {
                return Err(Error::Config(format!("duplicate location `{loc}`")));
            }
            if !addresses.insert((host.clone(), port)) {
                return Err(Error::Config(format!(
                    "address {host}:{port} is used twice"
                )));
            }
            locations.push((loc, PeerAddress { host, port }));
        }
        if locations.is_empty() {
            return Err(Error::Config("no locations configured".into()));
        }
        Ok(HttpConfig {
            locations,
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn retry(&self) -> RetryPolicy {
        self.retry
    }

    pub fn address(&self, location: &LocationId) -> Option<&PeerAddress> {
        self.locations
            .iter()
            .find(|(l, _)| l == location)
            .map(|(_, a)| a)
    }

    /// The URL `sender` posts to when messaging `receiver`.
    pub fn message_url(&self, sender: &LocationId, receiver: &LocationId) -> Option<String> {
        self.address(receiver).map(|a| {
            format!(
                "http://{}:{}/msg/{}",
                a.host,
                a.port,
                utf8_percent_encode(sender.as_str(), PATH_SEGMENT)
            )
        })
    }
}

#[derive(Default)]
struct Inboxes {
    queues: Mutex<HashMap<LocationId, VecDeque<Encoded>>>,
    ready: Condvar,
}

/// A running location: listener thread plus an HTTP client for sends.
///
/// The listener starts when the endpoint is created and stops when it is
/// dropped; messages arriving after that are lost.
pub struct HttpEndpoint {
    me: LocationId,
    config: HttpConfig,
    inboxes: Arc<Inboxes>,
    server: Arc<tiny_http::Server>,
    shutdown: Arc<AtomicBool>,
    listener: Option<JoinHandle<()>>,
    agent: ureq::Agent,
}

impl Backend for HttpConfig {
    type Endpoint = HttpEndpoint;

    fn locations(&self) -> Vec<LocationId> {
        self.locations.iter().map(|(l, _)| l.clone()).collect()
    }

    fn endpoint(&self, me: &LocationId) -> Result<HttpEndpoint, Error> {
        let port = self
            .address(me)
            .ok_or_else(|| Error::UnknownLocation(me.clone()))?
            .port;
        let server = tiny_http::Server::http(("0.0.0.0", port))
            .map_err(|e| Error::Transport(format!("cannot listen on port {port}: {e}")))?;
        let server = Arc::new(server);
        let inboxes = Arc::new(Inboxes::default());
        let shutdown = Arc::new(AtomicBool::new(false));
        let senders: HashSet<LocationId> = self.locations().into_iter().collect();
        let listener = {
            let server = Arc::clone(&server);
            let inboxes = Arc::clone(&inboxes);
            let shutdown = Arc::clone(&shutdown);
            thread::Builder::new()
                .name(format!("http-{me}"))
                .spawn(move || listen(&server, &inboxes, &senders, &shutdown))
                .map_err(|e| Error::Transport(e.to_string()))?
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .max_idle_connections(0)
            .timeout_connect(Some(Duration::from_secs(2)))
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .new_agent();
        Ok(HttpEndpoint {
            me: me.clone(),
            config: self.clone(),
            inboxes,
            server,
            shutdown,
            listener: Some(listener),
            agent,
        })
    }
}

fn listen(
    server: &tiny_http::Server,
    inboxes: &Inboxes,
    senders: &HashSet<LocationId>,
    shutdown: &AtomicBool,
) {
    loop {
        match server.recv() {
            Ok(request) => handle(request, inboxes, senders),
            Err(_) if shutdown.load(Ordering::SeqCst) => return,
            Err(_) => continue,
        }
    }
}

/// Validate an inbound request and enqueue it. Returns the sender on success.
fn accept(
    request: &mut tiny_http::Request,
    senders: &HashSet<LocationId>,
) -> Result<(LocationId, Encoded), String> {
    if *request.method() != tiny_http::Method::Post {
        return Err(format!("expected POST, got {}", request.method()));
    }
    let raw = request
        .url()
        .strip_prefix("/msg/")
        .ok_or_else(|| format!("unexpected path {}", request.url()))?;
    if raw.is_empty() || raw.contains('/') || raw.contains('?') {
        return Err(format!("unexpected path {}", request.url()));
    }
    let sender = percent_decode_str(raw)
        .decode_utf8()
        .map_err(|_| "sender is not UTF-8".to_string())?;
    let sender = LocationId::new(sender.into_owned()).map_err(|e| e.to_string())?;
    if !senders.contains(&sender) {
        return Err(format!("unknown sender `{sender}`"));
    }
    let mut body = Vec::new();
    request
        .as_reader()
        .read_to_end(&mut body)
        .map_err(|e| format!("cannot read body: {e}"))?;
    if !codec::is_well_formed(&body) {
        return Err("body is not a well-formed message".into());
    }
    Ok((sender, Encoded::from_bytes(body)))
}

fn handle(mut request: tiny_http::Request, inboxes: &Inboxes, senders: &HashSet<LocationId>) {
    match accept(&mut request, senders) {
        Ok((sender, message)) => {
            {
                let mut queues = inboxes.queues.lock().unwrap_or_else(|p| p.into_inner());
                queues.entry(sender).or_default().push_back(message);
                inboxes.ready.notify_all();
            }
            let _ = request.respond(tiny_http::Response::empty(200));
        }
        Err(reason) => {
            let _ = request.respond(tiny_http::Response::from_string(reason).with_status_code(400));
        }
    }
}

impl HttpEndpoint {
    pub fn location(&self) -> &LocationId {
        &self.me
    }
}

impl Transport for HttpEndpoint {
    fn send(&mut self, to: &LocationId, payload: &Encoded) -> Result<(), Error> {
        let url = self
            .config
            .message_url(&self.me, to)
            .ok_or_else(|| Error::UnknownLocation(to.clone()))?;
        let retry = self.config.retry;
        let mut last_error = String::new();
        for attempt in 0..retry.attempts.max(1) {
            if attempt > 0 {
                thread::sleep(retry.interval);
            }
            let response = self
                .agent
                .post(&url)
                .header("Content-Type", CONTENT_TYPE)
                .send(payload.as_bytes());
            match response {
                Ok(r) if r.status() == 200 => return Ok(()),
                Ok(r) => {
                    return Err(Error::Transport(format!(
                        "{url} rejected message with status {}",
                        r.status()
                    )))
                }
                Err(
                    e @ (ureq::Error::Io(_)
                    | ureq::Error::HostNotFound
                    | ureq::Error::ConnectionFailed),
                ) => {
                    last_error = e.to_string();
                }
                Err(e) => return Err(Error::Transport(format!("{url}: {e}"))),
            }
        }
        Err(Error::Transport(format!(
            "{url} unreachable after {} attempts: {last_error}",
            retry.attempts
        )))
    }

    fn recv(&mut self, from: &LocationId) -> Result<Encoded, Error> {
        let mut queues = self
            .inboxes
            .queues
            .lock()
            .unwrap_or_else(|p| p.into_inner());
        loop {
            if let Some(msg) = queues.get_mut(from).and_then(VecDeque::pop_front) {
                return Ok(msg);
            }
            queues = self
                .inboxes
                .ready
                .wait(queues)
                .unwrap_or_else(|p| p.into_inner());
        }
    }
}

impl Drop for HttpEndpoint {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        self.server.unblock();
        if let Some(listener) = self.listener.take() {
            let _ = listener.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_from_host_entries() {
        let cfg = HttpConfig::new([
            ("buyer", "buyer.example.com", 3000),
            ("seller", "shop.example.org", 4000),
        ])
        .unwrap();
        assert_eq!(
            cfg.locations(),
            vec![LocationId::from("buyer"), "seller".into()]
        );
        assert_eq!(cfg.retry(), RetryPolicy::default());
        assert_eq!(
            cfg.message_url(&"buyer".into(), &"seller".into()).unwrap(),
            "http://shop.example.org:4000/msg/buyer"
        );
    }

    #[test]
    fn config_rejects_bad_entries() {
        assert!(HttpConfig::new([("client", "a", 1), ("client", "b", 2)]).is_err());
        assert!(HttpConfig::new([("client", "a", 0)]).is_err());
        assert!(HttpConfig::new([("a", "h", 1), ("b", "h", 1)]).is_err());
        assert!(HttpConfig::new(Vec::<(&str, &str, u16)>::new()).is_err());
    }

    #[test]
    fn sender_is_percent_encoded() {
        let cfg = HttpConfig::new([("a b/ü", "h", 1), ("r", "h", 2)]).unwrap();
        assert_eq!(
            cfg.message_url(&"a b/ü".into(), &"r".into()).unwrap(),
            "http://h:2/msg/a%20b%2F%C3%BC"
        );
    }
}
