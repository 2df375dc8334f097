fn main() {
    std::process::exit(freeparticle::cli::run(std::env::args_os()));
}
