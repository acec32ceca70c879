fn main() {
    std::process::exit(fademac::cli_io::run_command(std::env::args_os().skip(1)));
}
