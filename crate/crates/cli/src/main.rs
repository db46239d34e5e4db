fn main() {
    std::process::exit(symrom_cli::main_with(std::env::args_os()));
}
