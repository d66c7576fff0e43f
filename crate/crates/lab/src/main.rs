fn main() {
    std::process::exit(transport_lab::cli::main_with_args(std::env::args_os()));
}
