fn main() -> std::process::ExitCode {
    varbandit_harness::cli::main()
}
