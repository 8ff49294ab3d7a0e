fn main() {
    std::process::exit(heun_volterra::cli::main());
}
