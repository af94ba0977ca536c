fn main() {
    std::process::exit(grhs_lab::cli::main_entry());
}
