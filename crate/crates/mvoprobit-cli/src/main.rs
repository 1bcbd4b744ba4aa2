fn main() {
    std::process::exit(mvoprobit_cli::run_cli());
}
