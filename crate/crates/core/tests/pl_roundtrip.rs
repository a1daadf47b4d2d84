mod common;

use autoasm::pl::{parse, pretty_print};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_pretty_print_fixed_point(p in common::arb::program()) {
        let text = pretty_print(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(pretty_print(&back), text);
    }

    #[test]
    fn lexer_and_parser_never_panic(src in "\\PC{0,80}") {
        let _ = parse(&src);
    }
}
