fn main() {
    eprintln!("cli under construction");
}
