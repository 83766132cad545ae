fn main() -> std::process::ExitCode {
    isumap::cli::args::main()
}
