fn main() {
    std::process::exit(isoscan::cli::run(std::env::args_os()));
}
