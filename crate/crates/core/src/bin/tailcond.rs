fn main() {
    std::process::exit(tailcond::cli::main_with_args(std::env::args_os()));
}
