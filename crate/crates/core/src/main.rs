fn main() { std::process::exit(urn_sa::cli::main()) }
