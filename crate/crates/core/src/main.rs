fn main() {
    std::process::exit(absorbnet::cli::run(std::env::args_os()));
}
