fn main() {
    std::process::exit(fbid::cli::run_cli(std::env::args_os()));
}
