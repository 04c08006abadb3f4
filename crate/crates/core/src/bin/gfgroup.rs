fn main() {
    std::process::exit(gfgroup_core::cli::run(std::env::args_os()));
}
