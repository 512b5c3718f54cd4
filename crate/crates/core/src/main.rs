fn main() {
    std::process::exit(curvkit::cli::run(std::env::args_os()));
}
