fn main() {
    std::process::exit(wellspec::cli::run(std::env::args_os()));
}
