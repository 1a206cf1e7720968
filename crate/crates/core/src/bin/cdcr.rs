fn main() -> std::process::ExitCode {
    cdcr::cli::main()
}
