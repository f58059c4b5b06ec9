fn main() {
    std::process::exit(hardy_cert::run_cli());
}
