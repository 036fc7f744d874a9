fn main() {
    std::process::exit(supcr::cli::run());
}
