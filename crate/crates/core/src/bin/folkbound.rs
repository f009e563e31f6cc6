fn main() {
    folkbound::cli::main()
}
