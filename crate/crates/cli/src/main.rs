fn main() -> std::process::ExitCode {
    bbm_cli::run(std::env::args_os())
}
