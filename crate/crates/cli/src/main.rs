fn main() {
    let code = spinreset_cli::run(std::env::args_os());
    std::process::exit(code);
}
