fn main() {
    std::process::exit(mvlayers::cli::run(std::env::args_os()));
}
