use clap::Parser;

use spcr::cli::{exit_code, run, Cli, THREADS_ENV};

fn main() {
    let cli = Cli::parse();
    if let Some(t) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}
