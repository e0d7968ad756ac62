fn main() {
    std::process::exit(wirelink::cli::main_with_args(std::env::args_os()));
}
