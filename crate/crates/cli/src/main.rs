fn main() {
    std::process::exit(nfactor_cli::run(std::env::args_os()));
}
