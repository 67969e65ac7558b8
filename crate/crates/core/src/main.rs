fn main() {
    std::process::exit(fujita_lab::cli::run(std::env::args_os()));
}
