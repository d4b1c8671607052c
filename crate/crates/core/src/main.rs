fn main() -> std::process::ExitCode {
    curvscale::cli_runner::run(std::env::args_os())
}
