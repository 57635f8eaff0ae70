fn main() {
    std::process::exit(qssfreq::cli::run(std::env::args_os()));
}
