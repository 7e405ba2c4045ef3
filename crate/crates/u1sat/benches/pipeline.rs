fn main() { b(); } fn b() {}
