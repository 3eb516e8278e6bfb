use clap::Parser;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match har_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here with a zero exit code.
            let code = if err.exit_code() == 0 { 0 } else { 1 };
            let _ = err.print();
            return code;
        }
    };
    match har_cli::run(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            har_cli::exit_code(&err)
        }
    }
}
