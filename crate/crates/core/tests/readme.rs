#[test]
fn readme_quickstart_matches_example() {
    let readme = include_str!("../../../README.md");
    let example = include_str!("../examples/quickstart.rs");
    assert!(readme.contains(&format!("```rust\n{example}```")));
}
