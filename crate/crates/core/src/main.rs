fn main() {
    std::process::exit(magnon_casimir::cli::main_with(std::env::args_os()));
}
