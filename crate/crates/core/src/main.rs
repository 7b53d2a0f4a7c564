fn main() { std::process::exit(servoneuro::cli::run()); }
