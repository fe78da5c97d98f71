fn main() -> std::process::ExitCode {
    maxcorr::cli::run()
}
