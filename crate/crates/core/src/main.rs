fn main() {
    std::process::exit(marsad_core::cli::main_with_args(std::env::args_os()));
}
