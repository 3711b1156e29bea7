fn main() {
    std::process::exit(subpheno::cli::run_cli(std::env::args_os()));
}
