fn main() -> std::process::ExitCode {
    diffcorr::cli::run(std::env::args_os())
}
