fn main() {
    std::process::exit(chainavail::cli::main_with(std::env::args_os()));
}
