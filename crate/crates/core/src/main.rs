fn main() {
    std::process::exit(sturm_core::cli::run(std::env::args_os()));
}
