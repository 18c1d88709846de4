fn main() {
    std::process::exit(rpys_kit::cli::main());
}
