//! Choreographic programming.
//!
//! Write a distributed protocol once, as a single [`Choreo`] program that says
//! what every participant does. At run time each participant projects it to
//! its own [`Network`] program ([`epp`]) and runs that over a pluggable
//! [`Backend`]: an in-process [`LocalFabric`] for tests, or [`HttpConfig`] for
//! real deployments. [`run_choreo`] runs the choreography directly, in one
//! thread, and is the reference the distributed run must agree with.
//!
//! ```
//! use choreo::{comm, locally, mdo, run_all, run_choreo, Choreo, DelayPolicy, Located, LocalFabric};
//!
//! fn ping() -> Choreo<Located<String>> {
//!     mdo! {
//!         msg <- locally("alice", |_| "ping".to_string());
//!         msg <- comm("alice", &msg, "bob");
//!         locally("bob", move |un| format!("{}-pong", un.unwrap(&msg)))
//!     }
//! }
//!
//! let expected = run_choreo(ping()).unwrap();
//! let fabric = LocalFabric::new(["alice", "bob"], DelayPolicy::Immediate).unwrap();
//! let results = run_all(&fabric, ping).unwrap();
//! assert_eq!(results["bob"], expected);
//! assert_eq!(results["alice"], Located::Absent);
//! ```

pub mod backend;
pub mod choreo;
pub mod codec;
pub mod effect;
pub mod error;
pub mod location;
pub mod network;
pub mod projection;

pub use backend::{run_all, run_all_traced, DelayPolicy, HttpConfig, LocalFabric, RetryPolicy};
pub use choreo::{
    comm, comm_locally, cond, locally, run_choreo, run_choreo_observed, try_locally, Choreo,
    ChoreoEvent,
};
pub use codec::{Encoded, Wire};
pub use effect::Program;
pub use error::{Error, LocalError, Result};
pub use location::{Located, LocationId, OwnershipError, Unwrap};
pub use network::{run_network, run_network_observed, Backend, Network, NetworkEvent, Transport};
pub use projection::{epp, run_choreography};
