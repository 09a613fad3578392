fn main() {
    std::process::exit(gatedqdot::cli::main());
}
