fn main() { std::process::exit(fpes::cli::main()); }
