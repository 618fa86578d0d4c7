fn main() -> std::process::ExitCode {
    termvec::cli::main()
}
