fn main() {
    std::process::exit(fractraj::cli::run(std::env::args_os()));
}
