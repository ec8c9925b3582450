//! The HTTP backend over loopback.

use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use choreo::codec::{decode, encode};
use choreo::{
    comm, cond, locally, mdo, run_choreo, run_choreography, Backend, Choreo, Error, HttpConfig,
    Located, RetryPolicy, Transport,
};

fn free_ports(n: usize) -> Vec<u16> {
    let listeners: Vec<TcpListener> = (0..n)
        .map(|_| TcpListener::bind("127.0.0.1:0").unwrap())
        .collect();
    listeners
        .iter()
        .map(|l| l.local_addr().unwrap().port())
        .collect()
}

fn config(names: &[&str]) -> HttpConfig {
    let ports = free_ports(names.len());
    HttpConfig::new(names.iter().zip(ports).map(|(n, p)| (*n, "127.0.0.1", p))).unwrap()
}

fn post(url: &str, method: &str, body: &[u8]) -> u16 {
    let agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .new_agent();
    let response = match method {
        "POST" => agent
            .post(url)
            .header("Content-Type", "application/octet-stream")
            .send(body),
        _ => agent.get(url).call(),
    };
    response.unwrap().status().as_u16()
}

#[test]
fn raw_post_lands_in_the_senders_inbox() {
    let cfg = config(&["alice", "bob"]);
    let mut bob = cfg.endpoint(&"bob".into()).unwrap();
    let url = cfg.message_url(&"alice".into(), &"bob".into()).unwrap();
    assert_eq!(post(&url, "POST", b"[1,2]"), 200);
    let got: Vec<i32> = decode(bob.recv(&"alice".into()).unwrap().as_bytes()).unwrap();
    assert_eq!(got, vec![1, 2]);
}

#[test]
fn malformed_requests_are_rejected() {
    let cfg = config(&["alice", "bob"]);
    let _bob = cfg.endpoint(&"bob".into()).unwrap();
    let base = cfg.message_url(&"alice".into(), &"bob".into()).unwrap();
    let root = base.trim_end_matches("/msg/alice");
    assert_eq!(post(&base, "GET", b""), 400);
    assert_eq!(post(&format!("{root}/msg/mallory"), "POST", b"1"), 400);
    assert_eq!(post(&format!("{root}/other/alice"), "POST", b"1"), 400);
    assert_eq!(post(&format!("{root}/msg/"), "POST", b"1"), 400);
    assert_eq!(post(&base, "POST", b"{not json"), 400);
}

#[test]
fn messages_from_one_sender_arrive_in_order() {
    let cfg = config(&["alice", "bob"]);
    let mut bob = cfg.endpoint(&"bob".into()).unwrap();
    let mut alice = cfg.endpoint(&"alice".into()).unwrap();
    for i in 0..50 {
        alice.send(&"bob".into(), &encode(&i).unwrap()).unwrap();
    }
    for i in 0..50 {
        let got: i32 = decode(bob.recv(&"alice".into()).unwrap().as_bytes()).unwrap();
        assert_eq!(got, i);
    }
}

#[test]
fn sender_retries_until_the_receiver_is_up() {
    let cfg = config(&["alice", "bob"]);
    let late = cfg.clone();
    let receiver = thread::spawn(move || {
        thread::sleep(Duration::from_millis(700));
        let mut bob = late.endpoint(&"bob".into()).unwrap();
        decode::<String>(bob.recv(&"alice".into()).unwrap().as_bytes()).unwrap()
    });
    let mut alice = cfg.endpoint(&"alice".into()).unwrap();
    let start = Instant::now();
    alice.send(&"bob".into(), &encode(&"hi").unwrap()).unwrap();
    assert!(start.elapsed() >= Duration::from_millis(500));
    assert_eq!(receiver.join().unwrap(), "hi");
}

#[test]
fn sender_gives_up_after_the_retry_budget() {
    let cfg = config(&["alice", "bob"]).with_retry(RetryPolicy {
        attempts: 3,
        interval: Duration::from_millis(10),
    });
    let mut alice = cfg.endpoint(&"alice".into()).unwrap();
    let err = alice.send(&"bob".into(), &encode(&1).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

#[test]
fn endpoint_for_unknown_location_is_an_error() {
    let cfg = config(&["alice"]);
    assert!(matches!(
        cfg.endpoint(&"zed".into()),
        Err(Error::UnknownLocation(_))
    ));
}

fn protocol() -> Choreo<Located<String>> {
    mdo! {
        n <- locally("alice", |_| 21);
        n <- comm("alice", &n, "bob");
        doubled <- locally("bob", move |un| un.unwrap(&n) * 2);
        cond("bob", &doubled, |d: i32| {
            mdo! {
                s <- locally("carol", move |_| format!("answer {d}"));
                comm("carol", &s, "alice")
            }
        })
    }
}

#[test]
fn choreography_runs_across_http_endpoints() {
    let cfg = config(&["alice", "bob", "carol"]);
    let expected = run_choreo(protocol()).unwrap();
    let handles: Vec<_> = cfg
        .locations()
        .into_iter()
        .map(|loc| {
            let cfg = cfg.clone();
            thread::spawn(move || (loc.clone(), run_choreography(&cfg, protocol(), loc)))
        })
        .collect();
    for h in handles {
        let (loc, result) = h.join().unwrap();
        assert_eq!(result.unwrap(), expected.view_from(&loc), "at {loc}");
    }
}
