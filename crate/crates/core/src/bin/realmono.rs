fn main() {
    std::process::exit(realmono::cli::run(std::env::args_os()));
}
