use std::io::{self, BufReader};
use std::process::ExitCode;

fn main() -> ExitCode {
    let status = choreo_examples::cli::run(
        std::env::args_os(),
        BufReader::new(io::stdin()),
        io::stdout(),
        io::stderr(),
    );
    ExitCode::from(status as u8)
}
