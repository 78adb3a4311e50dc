fn main() {
    std::process::exit(levels_lab::cli::run(std::env::args_os()));
}
