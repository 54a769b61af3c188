fn main() {
    std::process::exit(topowalk::cli::run());
}
