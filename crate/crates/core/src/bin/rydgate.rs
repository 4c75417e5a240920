use std::io;

fn main() {
    if let Err(e) = rydgate::cli::init_threads_from_env() {
        eprintln!("error: {e}");
        std::process::exit(rydgate::cli::exit_code(&e));
    }
    let code = rydgate::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
