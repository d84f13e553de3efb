fn main() {
    std::process::exit(semgraph::cli::run(std::env::args_os()));
}
