fn main() {
    std::process::exit(discrete_cover::cli::main_with_args(std::env::args_os()));
}
