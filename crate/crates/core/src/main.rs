fn main() -> std::process::ExitCode {
    poselink::cli::main()
}
