fn main() {
    std::process::exit(qcpline::cli::main_with_args(std::env::args_os()));
}
