use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match biobench_cli::run_args(std::env::args_os()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(biobench_cli::EXIT_RUNTIME as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            // clap renders help and version through the error path with status 0
            if e.code == 0 {
                print!("{}", e.message);
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {}", e.message.trim_end());
            ExitCode::from(e.code as u8)
        }
    }
}
