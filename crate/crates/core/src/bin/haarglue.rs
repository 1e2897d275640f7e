fn main() {
    std::process::exit(haarglue::cli::main_with(std::env::args_os()));
}
