use clap::Parser;
use sphere_flows::cli::{run, Cli, EXIT_OK, EXIT_USAGE};
use std::io::Write;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let out = run(&cli);
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &out.body),
        None => std::io::stdout().write_all(out.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("sphere-flows: {e}");
        std::process::exit(EXIT_USAGE);
    }
    std::process::exit(out.code);
}
