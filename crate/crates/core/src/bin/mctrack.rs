fn main() {
    std::process::exit(mctrack::cli::main_with(std::env::args_os()));
}
