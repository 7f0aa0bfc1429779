use std::process::ExitCode;

fn main() -> ExitCode {
    ratesearch::cli::run()
}
