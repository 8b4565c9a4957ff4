fn main() {
    std::process::exit(modent::cli::run(std::env::args_os()));
}
