fn main() {
    std::process::exit(hhrd::cli::cli_main(std::env::args_os()));
}
