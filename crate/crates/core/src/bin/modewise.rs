fn main() {
    std::process::exit(modewise::cli::run(std::env::args_os()));
}
