fn main() {
    std::process::exit(backsim::cli::run(std::env::args_os()));
}
