fn main() {
    // placeholder while the library is under construction
}
