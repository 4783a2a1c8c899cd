fn main() {
    std::process::exit(aggsent::cli::run(std::env::args_os()));
}
