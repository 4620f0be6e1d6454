fn main() {
    std::process::exit(snls::cli::run_cli(std::env::args_os()));
}
