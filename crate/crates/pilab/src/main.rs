fn main() {
    let code = pilab::cli::run(std::env::args().collect());
    std::process::exit(code);
}
