fn main() {
    std::process::exit(polylyap::cli::run(std::env::args_os()));
}
