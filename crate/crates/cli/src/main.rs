use clap::Parser;

fn main() {
    let cli = ecgot_cli::Cli::parse();
    ecgot_cli::init_logging(cli.verbose);
    match ecgot_cli::dispatch(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
