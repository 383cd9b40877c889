fn main() -> std::process::ExitCode {
    musclesim::cli::main_with_args(std::env::args_os())
}
