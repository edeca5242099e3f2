fn main() {
    std::process::exit(ionhom_cli::run(std::env::args_os()));
}
