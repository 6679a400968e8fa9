fn main() {
    std::process::exit(jcurve::cli::main_with_args(std::env::args_os()));
}
