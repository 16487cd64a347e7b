/// Splits on non-alphanumeric characters and lowercases.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::tokenize;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(tokenize("Draft an API-call to Workday!"), ["draft", "an", "api", "call", "to", "workday"]);
        assert!(tokenize(" ,;- ").is_empty());
        assert_eq!(tokenize("Ünïcode Straße"), ["ünïcode", "straße"]);
    }
}
