fn main() {
    std::process::exit(pcadepth::cli::main_with_args(std::env::args_os()));
}
