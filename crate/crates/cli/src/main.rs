fn main() {
    std::process::exit(prolate_cli::run(std::env::args_os()));
}
