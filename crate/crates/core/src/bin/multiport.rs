fn main() -> std::process::ExitCode {
    multiport::cli::main()
}
