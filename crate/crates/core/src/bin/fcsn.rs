fn main() {
    std::process::exit(fcsn::cli::main_with_args(std::env::args_os()));
}
