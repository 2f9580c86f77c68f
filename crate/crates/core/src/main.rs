fn main() {
    std::process::exit(embkernel::cli::run(std::env::args_os()));
}
