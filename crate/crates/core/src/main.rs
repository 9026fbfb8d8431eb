fn main() {
    std::process::exit(alpha_bridge::cli::dispatch(std::env::args_os()));
}
