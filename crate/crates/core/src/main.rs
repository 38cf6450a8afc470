fn main() {
    std::process::exit(tropdp::cli::main());
}
