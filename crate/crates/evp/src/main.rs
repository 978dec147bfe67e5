fn main() {
    evp::cli::main_entry();
}
