fn main() {
    std::process::exit(hlpuf::runner::cli::main_from(std::env::args_os()));
}
