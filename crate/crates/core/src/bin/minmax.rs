fn main() {
    std::process::exit(noisy_minmax::cli::main_with_args(std::env::args_os()));
}
