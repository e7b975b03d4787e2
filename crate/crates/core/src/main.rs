fn main() {
    std::process::exit(rockmass::cli::main_entry());
}
