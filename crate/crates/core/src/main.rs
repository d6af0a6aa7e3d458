use std::env;
use std::process::ExitCode;

fn main() -> ExitCode {
    // die silently on a closed pipe (`drivesense ... | head`) like any filter
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    ExitCode::from(drivesense::cli::run(env::args_os()) as u8)
}
