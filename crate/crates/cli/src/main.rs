fn main() {
    std::process::exit(barriers_cli::run(std::env::args_os()));
}
