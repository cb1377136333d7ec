fn main() {
    std::process::exit(taxel_calib::cli::main(std::env::args_os()));
}
