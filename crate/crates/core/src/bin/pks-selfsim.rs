fn main() {
    std::process::exit(pks_selfsim::cli::main_with_args(std::env::args_os()));
}
