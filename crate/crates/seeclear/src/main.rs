fn main() {
    std::process::exit(seeclear::cli::run());
}
