fn main() {
    std::process::exit(qwres::cli::main_with_args(std::env::args_os()));
}
