fn main() {
    std::process::exit(ifsconn::cli::run(std::env::args_os()));
}
