fn main() -> std::process::ExitCode {
    geoaction::cli::main_with_args(std::env::args_os())
}
