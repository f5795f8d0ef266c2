fn main() {
    std::process::exit(hotcs::cli::main_with(std::env::args_os()));
}
