fn main() {
    std::process::exit(sparse3d::cli::run(std::env::args()));
}
