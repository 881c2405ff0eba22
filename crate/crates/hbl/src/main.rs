fn main() {
    std::process::exit(hbl::run(std::env::args_os()));
}
