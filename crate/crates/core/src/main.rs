fn main() {
    std::process::exit(stl_splitter::cli::run(std::env::args_os()));
}
