fn main() {
    std::process::exit(finq::cli::run());
}
