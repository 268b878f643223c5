fn main() {
    std::process::exit(srb::cli::run(std::env::args_os()));
}
