fn main() {
    std::process::exit(interplay_core::cli::run(std::env::args_os()));
}
