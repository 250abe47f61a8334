fn main() {
    std::process::exit(freecert::cli::run(std::env::args_os()));
}
