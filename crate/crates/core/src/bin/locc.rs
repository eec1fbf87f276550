fn main() {
    std::process::exit(locc_core::cli::main_with_env());
}
