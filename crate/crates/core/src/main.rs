fn main() -> std::process::ExitCode {
    flowlat::cli::main()
}
