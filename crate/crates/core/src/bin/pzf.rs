fn main() {
    std::process::exit(pzf::cli::main_with_args(std::env::args_os()));
}
