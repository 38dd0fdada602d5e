fn main() {
    // criterion harness filled in with the suite
}
