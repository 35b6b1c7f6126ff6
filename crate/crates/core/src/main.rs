fn main() {
    std::process::exit(chf_core::cli::run(std::env::args_os()));
}
