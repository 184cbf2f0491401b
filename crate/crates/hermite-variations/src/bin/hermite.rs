fn main() {
    std::process::exit(hermite_variations::cli::run(std::env::args_os()));
}
