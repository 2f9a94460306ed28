fn main() {
    std::process::exit(aqc_cli::main_with_args(std::env::args_os()));
}
