fn main() {
    std::process::exit(quasiwave::cli::main_with_args(std::env::args_os()));
}
