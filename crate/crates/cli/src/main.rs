fn main() {
    println!("cychom");
}
