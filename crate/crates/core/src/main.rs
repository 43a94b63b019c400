fn main() {
    std::process::exit(rsgnn::cli::run());
}
