use std::process::ExitCode;

fn main() -> ExitCode {
    match lucelab::cli::run(std::env::args_os()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(lucelab::cli::CliError::Usage(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("lucelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
