fn main() -> std::process::ExitCode {
    nlspinor::cli::main()
}
