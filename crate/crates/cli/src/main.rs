use clap::Parser;

fn main() {
    let cli = bulkq::Cli::parse();
    let code = match bulkq::run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code
        }
    };
    std::process::exit(code);
}
