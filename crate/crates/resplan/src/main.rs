fn main() -> std::process::ExitCode {
    resplan::cli::main()
}
