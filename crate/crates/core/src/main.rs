fn main() {
    std::process::exit(lrmc::cli::run(std::env::args_os()));
}
