fn main() {
    std::process::exit(curved_dirac_cli::run(std::env::args_os()));
}
