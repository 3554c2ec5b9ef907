fn main() {
    std::process::exit(gullivr_cli::run(std::env::args()));
}
