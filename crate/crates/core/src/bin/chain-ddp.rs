fn main() {
    std::process::exit(chain_ddp::cli::main_with_args(std::env::args_os()));
}
