fn main() {
    std::process::exit(rbp::run_cli(std::env::args_os()));
}
