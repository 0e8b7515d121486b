fn main() {
    std::process::exit(qmine::cli::run(std::env::args_os()));
}
