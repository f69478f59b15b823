fn main() {
    std::process::exit(reinforce_walk::cli::main());
}
