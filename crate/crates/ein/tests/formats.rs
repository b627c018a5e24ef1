use ein::data::{data_json, parse_data, DataError};
use ein::doc::{from_json, to_json, DocError};
use ein::envfile::{env_text, parse_env};
use ein_core::{parse_in, IndexCtx, SurfaceType};
use num_rational::BigRational;

#[test]
fn env_lines_and_semicolons_agree() {
    let lines = "# geometry\nT : TEN[3,3]\nF : FLD3[]\nV : IMG2[2]\nH : KRN\nindex i : 3\nindex j : 3\n";
    let inline = "tensor T : TEN[3,3]; F : FLD3[]; V : IMG2[2]; H : KRN; index i : 3; index j : 3;";
    let a = parse_env(lines).unwrap();
    let b = parse_env(inline).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.types.get("T"), Some(&SurfaceType::Ten(vec![3, 3])));
    assert_eq!(a.types.get("F"), Some(&SurfaceType::Fld { dim: 3, shape: vec![] }));
    assert_eq!(a.ctx, IndexCtx::new().with("i", 3).with("j", 3));
    assert_eq!(parse_env(&env_text(&a)).unwrap(), a);
}

#[test]
fn env_errors_name_the_line() {
    let err = parse_env("T : TEN[3]\nU : TEN[\n").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(parse_env("index i : zero").is_err());
}

#[test]
fn data_accepts_nested_flat_and_rational_entries() {
    let text = r#"{"tensors": {
        "M": {"shape": [2, 2], "data": [[1, 2], ["3/2", 0.25]]},
        "T": {"shape": [2], "data": [5, -1]},
        "A": {"shape": [], "data": [7]}
    }}"#;
    let data = parse_data(text).unwrap();
    let m = &data["M"];
    assert_eq!(m.shape, vec![2, 2]);
    assert_eq!(m.data[2], BigRational::new(3.into(), 2.into()));
    assert_eq!(m.data[3], BigRational::new(1.into(), 4.into()));
    assert_eq!(parse_data(&data_json(&data)).unwrap(), data);
}

#[test]
fn data_errors_are_specific() {
    let short = r#"{"tensors": {"T": {"shape": [3], "data": [1, 2]}}}"#;
    assert_eq!(parse_data(short), Err(DataError::Shape("T".into())));
    let bad = r#"{"tensors": {"T": {"shape": [1], "data": [true]}}}"#;
    assert_eq!(parse_data(bad), Err(DataError::Entry("T".into())));
    assert!(matches!(parse_data("{"), Err(DataError::Json(_))));
}

#[test]
fn json_documents_round_trip() {
    let env = parse_env("T : TEN[3]; M : TEN[3,3]; F : FLD3[]; x : TEN[3]; V : IMG3[]; H : KRN").unwrap();
    for text in [
        "delta(i,j) * T[j]",
        "sum(k,1,3, eps(i,j,k) * M[j,k]) - 3/2",
        "d([i,j], sqrt(F[]) * conv(V,[],H,[i])) @ x[]",
        "lift(3, pow(T[1], 2)) / -(4)",
    ] {
        let e = parse_in(text, &env.types).unwrap();
        assert_eq!(from_json(&to_json(&e)).unwrap(), e, "{text}");
    }
}

#[test]
fn malformed_documents_are_rejected() {
    assert!(matches!(from_json(r#"{"node": "frob", "children": []}"#), Err(DocError::UnknownKind(_))));
    assert!(matches!(from_json("[1"), Err(DocError::Json(_))));
}

#[test]
fn missing_attributes_are_reported() {
    assert!(matches!(from_json(r#"{"node": "tensor"}"#), Err(DocError::BadAttr { .. })));
}
