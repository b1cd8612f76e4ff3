fn main() {
    std::process::exit(aldsat_cli::main_with_args(std::env::args_os()));
}
