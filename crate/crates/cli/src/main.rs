fn main() {
    std::process::exit(pricegate::run());
}
