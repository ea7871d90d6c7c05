fn main() {
    std::process::exit(wingsmile::cli::run(std::env::args_os()));
}
