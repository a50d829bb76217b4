fn main() {
    std::process::exit(tilestencil::cli::main(std::env::args_os()));
}
