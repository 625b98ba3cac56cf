fn main() {
    std::process::exit(govdyn::cli::main_with_args(std::env::args_os()));
}
