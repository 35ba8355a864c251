fn main() {
    std::process::exit(mrws::cli::run(std::env::args_os()));
}
