fn main() {
    std::process::exit(vortexlab_cli::run(std::env::args_os()));
}
