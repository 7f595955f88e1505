fn main() -> std::process::ExitCode {
    incflow_cli::app::main_with_args(std::env::args())
}
