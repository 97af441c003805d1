fn main() {
    std::process::exit(alarmsift_cli::run());
}
