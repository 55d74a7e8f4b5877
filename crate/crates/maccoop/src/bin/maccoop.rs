fn main() {
    std::process::exit(maccoop::cli::run());
}
