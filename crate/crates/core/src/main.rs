fn main() {
    std::process::exit(stochmodels::cli::run(std::env::args_os()));
}
