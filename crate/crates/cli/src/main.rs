fn main() {
    std::process::exit(panolayout::run(std::env::args_os()));
}
