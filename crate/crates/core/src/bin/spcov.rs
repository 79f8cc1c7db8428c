use std::process::ExitCode;

fn main() -> ExitCode {
    spcov::cli::main()
}
