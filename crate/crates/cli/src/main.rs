fn main() {
    std::process::exit(sts_cli::run_cli(std::env::args_os()));
}
