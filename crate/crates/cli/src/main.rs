fn main() {
    std::process::exit(qbm_cli::run_command(std::env::args_os()));
}
