fn main() {
    std::process::exit(cascade_trees::cli::run());
}
