fn main() {
    std::process::exit(qpcocycle::cli::run(std::env::args_os()));
}
