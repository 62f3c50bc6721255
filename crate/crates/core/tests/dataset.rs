use equidisp::dataset::{read_column, read_pairs, write_pairs};
use equidisp::Error;

#[test]
fn named_columns() {
    let text = "id,hue,uronic\n1,1.04,0.8\n2,1.05,0.6\n";
    let s = read_pairs(text.as_bytes(), Some("uronic"), Some("hue")).unwrap();
    assert_eq!(s.pairs(), &[(0.8, 1.04), (0.6, 1.05)]);
}

#[test]
fn default_columns_and_round_trip() {
    let text = "x,y\n0.1,2\n-3,4.5\n";
    let s = read_pairs(text.as_bytes(), None, None).unwrap();
    let again = read_pairs(write_pairs(&s).as_bytes(), None, None).unwrap();
    assert_eq!(s, again);
}

#[test]
fn errors_carry_line_numbers() {
    let text = "x,y\n1,2\n3,oops\n";
    match read_pairs(text.as_bytes(), None, None) {
        Err(Error::Input(m)) => assert!(m.contains("line 3"), "{m}"),
        other => panic!("{other:?}"),
    }
    let text = "x,y\n1,2\n3,\n";
    assert!(read_pairs(text.as_bytes(), None, None).is_err());
    let text = "x,y\n1,2\n3\n";
    assert!(read_pairs(text.as_bytes(), None, None).is_err());
}

#[test]
fn missing_column_is_reported() {
    let err = read_pairs("a,b\n1,2\n".as_bytes(), Some("a"), Some("c")).unwrap_err();
    assert!(err.to_string().contains("'c'"));
}

#[test]
fn empty_input() {
    assert!(read_pairs("".as_bytes(), None, None).is_err());
    let s = read_pairs("x,y\n".as_bytes(), None, None).unwrap();
    assert!(s.is_empty());
}

#[test]
fn single_column() {
    assert_eq!(
        read_column("v\n0\n2\n".as_bytes(), None).unwrap(),
        vec![0.0, 2.0]
    );
    assert_eq!(
        read_column("a,v\n1,0\n1,2\n".as_bytes(), Some("v")).unwrap(),
        vec![0.0, 2.0]
    );
}
