fn main() {
    std::process::exit(alseg::cli::run(std::env::args_os()));
}
