fn main() {
    std::process::exit(gtm_core::cli::run(std::env::args_os()));
}
