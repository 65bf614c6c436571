fn main() {
    std::process::exit(penny_cli::main_with(std::env::args_os()));
}
