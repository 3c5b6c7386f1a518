fn main() {
    std::process::exit(nldp_cli::run(std::env::args_os()));
}
