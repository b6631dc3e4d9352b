use clap::Parser;
use strokeseg_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    if let Err(e) = run(cli, &mut stdout) {
        eprintln!("strokeseg: {e}");
        std::process::exit(e.exit_code());
    }
}
