fn main() {
    std::process::exit(adsqf::cli::main_with_args(std::env::args_os()));
}
