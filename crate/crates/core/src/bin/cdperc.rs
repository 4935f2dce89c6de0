fn main() {
    std::process::exit(cdperc::cli::main_with_args(std::env::args_os()));
}
