fn main() {
    std::process::exit(vortex_cli::main_with_args(std::env::args()));
}
