use clap::Parser;

fn main() {
    let cli = match dimest_cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the config-error code; 2 is reserved for warnings
            std::process::exit(if e.use_stderr() { dimest_cli::EXIT_CONFIG } else { dimest_cli::EXIT_OK });
        }
    };
    std::process::exit(dimest_cli::run(&cli));
}
