fn main() {
    std::process::exit(irsim::cli::cli_main(std::env::args_os()));
}
