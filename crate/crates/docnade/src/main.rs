fn main() {
    std::process::exit(docnade::cli::run());
}
