fn main() {
    std::process::exit(hjmm_cli::run(std::env::args_os()));
}
