fn main() {
    std::process::exit(scorebounds::cli::run(std::env::args_os()));
}
