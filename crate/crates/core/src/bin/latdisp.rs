fn main() {
    std::process::exit(latdisp::cli::run(std::env::args_os()));
}
