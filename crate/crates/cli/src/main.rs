fn main() {
    std::process::exit(deeprotor_cli::run_cli(std::env::args_os()));
}
