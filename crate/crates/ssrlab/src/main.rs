fn main() {
    std::process::exit(ssrlab::cli::main_with(std::env::args_os()));
}
