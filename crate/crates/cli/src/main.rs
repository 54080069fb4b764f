fn main() {
    std::process::exit(ctmark::cli::run(std::env::args_os()));
}
