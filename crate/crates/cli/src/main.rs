fn main() {
    std::process::exit(hp_robust_cli::main_with(std::env::args_os()));
}
