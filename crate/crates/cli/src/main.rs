fn main() {
    std::process::exit(joinest_cli::run(std::env::args_os().collect()));
}
