fn main() {
    std::process::exit(reltime::cli::main());
}
