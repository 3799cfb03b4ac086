fn main() {
    std::process::exit(zzcoupler::cli::main_with_args(std::env::args_os()));
}
