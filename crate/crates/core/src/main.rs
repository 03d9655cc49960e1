fn main() {
    std::process::exit(jss_core::cli::main());
}
