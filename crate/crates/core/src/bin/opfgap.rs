fn main() {
    std::process::exit(opfgap::cli::cli_main(std::env::args().collect()));
}
