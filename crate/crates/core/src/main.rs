fn main() {
    std::process::exit(stegmetrics::cli::dispatch(std::env::args_os()));
}
