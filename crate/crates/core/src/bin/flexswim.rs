fn main() {
    std::process::exit(flexswim::cli::run(std::env::args_os()));
}
