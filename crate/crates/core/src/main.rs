fn main() {
    std::process::exit(densecode::cli::run(std::env::args_os()));
}
