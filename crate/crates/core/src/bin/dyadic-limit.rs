fn main() {
    std::process::exit(dyadic_limit::cli::run(std::env::args_os()));
}
