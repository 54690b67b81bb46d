fn main() {
    std::process::exit(fxjump::cli::run());
}
