fn main() {
    std::process::exit(doccluster::cli::run(std::env::args_os()));
}
