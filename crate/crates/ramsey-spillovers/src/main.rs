fn main() {
    std::process::exit(ramsey_spillovers::io::run(std::env::args()));
}
