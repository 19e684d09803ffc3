fn main() {
    std::process::exit(gpm::cli::main());
}
