fn main() {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .init();
    std::process::exit(scseg::cli::cli_main(std::env::args_os()));
}
