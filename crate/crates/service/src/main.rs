fn main() {
    std::process::exit(thmdx::cli::run(std::env::args_os()));
}
