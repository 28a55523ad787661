fn main() {
    std::process::exit(geofuse_cli::run(std::env::args_os()));
}
