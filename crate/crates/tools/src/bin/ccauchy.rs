fn main() {
    std::process::exit(conformal_cauchy_tools::cli::run(std::env::args_os()));
}
