fn main() {
    let code = sensorkit::cli::run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code as i32);
}
