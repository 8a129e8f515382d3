use std::io::Write;

fn main() {
    let (stdout, stderr, code) = contextual_cli::run_args(std::env::args_os());
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(stdout.as_bytes());
    let _ = out.flush();
    let mut err = std::io::stderr().lock();
    let _ = err.write_all(stderr.as_bytes());
    let _ = err.flush();
    std::process::exit(code);
}
