fn main() {
    std::process::exit(tactile_bench::run(std::env::args_os()));
}
