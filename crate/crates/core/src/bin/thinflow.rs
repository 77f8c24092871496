fn main() {
    std::process::exit(thinflow::cli::main());
}
