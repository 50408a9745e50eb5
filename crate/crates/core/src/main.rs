fn main() {
    std::process::exit(radial_ma::cli::run(std::env::args_os()));
}
