fn main() {
    std::process::exit(curve3dvg::cli::run_command(std::env::args_os()));
}
