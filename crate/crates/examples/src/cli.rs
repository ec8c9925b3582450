//! `choreo-examples <example> <location> [--config FILE] [--backend local|http]`
//!
//! With the local backend every location of the example runs in this process
//! and `<location>` only selects whose output is shown (and, for the key-value
//! store, whether the client reads this terminal). With the HTTP backend this
//! process is `<location>` alone, and its peers are found through `--config`.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use choreo::{
    run_all, run_choreography, Choreo, DelayPolicy, Error, LocalFabric, Located, LocationId,
};
use chrono::NaiveDate;
use clap::{Parser, ValueEnum};

use crate::bookseller::{self, Shop, BUYER, BUYER2, SELLER, TAPL};
use crate::config::load_config;
use crate::kvs::{Replication, Terminal, CLIENT};
use crate::show::show_maybe_date;

pub const EXAMPLES: [&str; 6] = [
    "bookseller",
    "bookseller-ho",
    "bookseller-poly",
    "kvs-null",
    "kvs-primary-backup",
    "kvs-double-backup",
];

/// Exit status for usage and configuration errors.
pub const USAGE_ERROR: i32 = 2;
/// Exit status for failures while the choreography runs.
pub const RUN_ERROR: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Local,
    Http,
}

#[derive(Debug, Parser)]
#[command(
    name = "choreo-examples",
    about = "Run an example choreography at one location"
)]
struct Args {
    /// One of: bookseller, bookseller-ho, bookseller-poly, kvs-null, kvs-primary-backup, kvs-double-backup
    example: String,
    /// The location to run as
    location: String,
    /// Location map: `<location> <host> <port>` per line (required for http)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "local")]
    backend: BackendKind,
    /// Book the buyer asks for (bookseller examples)
    #[arg(long, default_value = TAPL)]
    title: String,
    /// Name of the buyer location (bookseller-poly)
    #[arg(long, default_value = BUYER)]
    buyer: String,
}

enum Example {
    Bookseller { shop: Shop, kind: BooksellerKind },
    Kvs(Replication),
}

#[derive(Clone)]
enum BooksellerKind {
    Single,
    TwoBuyers,
    Polymorphic(LocationId),
}

impl Example {
    fn locations(&self) -> Vec<LocationId> {
        match self {
            Example::Bookseller { kind, .. } => match kind {
                BooksellerKind::Single => vec![BUYER.into(), SELLER.into()],
                BooksellerKind::TwoBuyers => vec![BUYER.into(), BUYER2.into(), SELLER.into()],
                BooksellerKind::Polymorphic(buyer) => vec![buyer.clone(), SELLER.into()],
            },
            Example::Kvs(r) => r.locations().iter().map(|l| LocationId::from(*l)).collect(),
        }
    }
}

fn bookseller_choreo(shop: &Shop, kind: &BooksellerKind) -> Choreo<Located<Option<NaiveDate>>> {
    match kind {
        BooksellerKind::Single => {
            bookseller::bookseller(shop, bookseller::mk_decision1(shop.budget))
        }
        BooksellerKind::TwoBuyers => {
            bookseller::bookseller(shop, bookseller::mk_decision2(shop.budget))
        }
        BooksellerKind::Polymorphic(buyer) => {
            bookseller::bookseller_polymorphic(shop, buyer.clone())
                .expect("buyer validated when parsing arguments")
        }
    }
}

/// Run the CLI with the given arguments (including the program name) and
/// standard streams. Returns the exit status.
pub fn run<I, T>(
    args: I,
    stdin: impl BufRead + Send + 'static,
    stdout: impl Write + Send + 'static,
    stderr: impl Write + Send + 'static,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut stdout = SharedWriter::new(stdout);
    let mut stderr = SharedWriter::new(stderr);
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { USAGE_ERROR } else { 0 };
        }
    };
    let shop = Shop::fixture(args.title.clone());
    let example = match args.example.as_str() {
        "bookseller" => Example::Bookseller {
            shop,
            kind: BooksellerKind::Single,
        },
        "bookseller-ho" => Example::Bookseller {
            shop,
            kind: BooksellerKind::TwoBuyers,
        },
        "bookseller-poly" => {
            let buyer = match LocationId::new(args.buyer.clone()) {
                Ok(b) if b != SELLER => b,
                _ => {
                    let _ = writeln!(stderr, "invalid buyer `{}`", args.buyer);
                    return USAGE_ERROR;
                }
            };
            Example::Bookseller {
                shop,
                kind: BooksellerKind::Polymorphic(buyer),
            }
        }
        "kvs-null" => Example::Kvs(Replication::Null),
        "kvs-primary-backup" => Example::Kvs(Replication::PrimaryBackup),
        "kvs-double-backup" => Example::Kvs(Replication::DoubleBackup),
        other => {
            let _ = writeln!(
                stderr,
                "Unknown example: {other} (expected one of {})",
                EXAMPLES.join(", ")
            );
            return USAGE_ERROR;
        }
    };
    let locations = example.locations();
    let me = match locations.iter().find(|l| **l == args.location.as_str()) {
        Some(l) => l.clone(),
        None => {
            let _ = writeln!(stderr, "Unknown location: {}", args.location);
            return USAGE_ERROR;
        }
    };
    let outcome = match args.backend {
        BackendKind::Local => run_local(&example, &me, stdin, &mut stdout, &mut stderr),
        BackendKind::Http => {
            let Some(path) = &args.config else {
                let _ = writeln!(stderr, "--config is required with --backend http");
                return USAGE_ERROR;
            };
            let config = match load_config(path) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(stderr, "{e}");
                    return USAGE_ERROR;
                }
            };
            if let Some(missing) = locations.iter().find(|l| config.address(l).is_none()) {
                let _ = writeln!(
                    stderr,
                    "configuration error: no address for location `{missing}`"
                );
                return USAGE_ERROR;
            }
            run_http(&example, &me, &config, stdin, &mut stdout, &mut stderr)
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            RUN_ERROR
        }
    }
}

fn print_located_date(out: &mut impl Write, v: &Located<Option<NaiveDate>>) {
    if let Located::Present { value, .. } = v {
        let _ = writeln!(out, "{}", show_maybe_date(value));
    }
}

fn run_local(
    example: &Example,
    me: &LocationId,
    stdin: impl BufRead + Send + 'static,
    stdout: &mut SharedWriter,
    stderr: &mut SharedWriter,
) -> Result<(), Error> {
    let fabric = LocalFabric::new(example.locations(), DelayPolicy::Immediate)?;
    match example {
        Example::Bookseller { shop, kind } => {
            let results = run_all(&fabric, || bookseller_choreo(shop, kind))?;
            print_located_date(stdout, &results[me]);
        }
        Example::Kvs(replication) => {
            let terminal = if *me == CLIENT {
                Terminal::new(stdin, stdout.clone(), stderr.clone())
            } else {
                Terminal::closed()
            };
            run_all(&fabric, || replication.session(terminal.clone()))?;
        }
    }
    let _ = stdout.flush();
    Ok(())
}

fn run_http(
    example: &Example,
    me: &LocationId,
    config: &choreo::HttpConfig,
    stdin: impl BufRead + Send + 'static,
    stdout: &mut SharedWriter,
    stderr: &mut SharedWriter,
) -> Result<(), Error> {
    match example {
        Example::Bookseller { shop, kind } => {
            let result = run_choreography(config, bookseller_choreo(shop, kind), me.clone())?;
            print_located_date(stdout, &result);
        }
        Example::Kvs(replication) => {
            let terminal = if *me == CLIENT {
                Terminal::new(stdin, stdout.clone(), stderr.clone())
            } else {
                Terminal::closed()
            };
            run_choreography(config, replication.session(terminal), me.clone())?;
        }
    }
    let _ = stdout.flush();
    Ok(())
}

/// A writer several owners can hold; the CLI's output streams are shared with
/// the client's terminal.
#[derive(Clone)]
struct SharedWriter(Arc<Mutex<dyn Write + Send>>);

impl SharedWriter {
    fn new(w: impl Write + Send + 'static) -> Self {
        SharedWriter(Arc::new(Mutex::new(w)))
    }
}

impl Write for SharedWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap_or_else(|p| p.into_inner()).write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.0.lock().unwrap_or_else(|p| p.into_inner()).flush()
    }
}
