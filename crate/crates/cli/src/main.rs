fn main() {
    std::process::exit(ccp_cli::run(std::env::args_os()));
}
