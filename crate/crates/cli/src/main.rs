fn main() {
    std::process::exit(beamspec_cli::run(std::env::args_os()));
}
