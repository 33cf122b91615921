fn main() {
    std::process::exit(simgen::cli::run(std::env::args_os()));
}
