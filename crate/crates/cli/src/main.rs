fn main() {
    std::process::exit(fgm_cli::main_with_args(std::env::args_os()));
}
