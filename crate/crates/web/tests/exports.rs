use jetforms_web::{b_system_json, el_json, regularity_json};
use serde_json::Value;

const PLATE: &str = "m = 2\nn = 1\nk = 2\nfield q(x[1], x[2]) = 1\n\
                     lagrangian = 1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u[0,0])\n";

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn euler_lagrange_of_plate() {
    let v = json(el_json(PLATE).unwrap());
    assert_eq!(v["equations"].as_array().unwrap().len(), 1);
    assert_eq!(v["max_order"], 4);
    assert!(el_json("m = 1\nn = 1\nk = 1\nlagrangian = u[1] +\n").unwrap_err().contains("parse error"));
}

#[test]
fn b_system_views() {
    let v = json(b_system_json(2, 2).unwrap());
    assert_eq!((v["unknowns"].as_u64(), v["equations"].as_u64()), (Some(8), Some(8)));
    assert_eq!(v["verdict"], "exactly-determined");
    assert_eq!(v["matrix"].as_array().unwrap().len(), 8);
    assert_eq!(v["selection_verified"], true);
    let v = json(b_system_json(1, 3).unwrap());
    assert_eq!(v["selected"], Value::Null);
    assert!(b_system_json(5, 2).is_err());
}

#[test]
fn regularity_views() {
    let v = json(regularity_json(PLATE, 1, 3).unwrap());
    assert_eq!(v["hessian"][1][1], "2");
    for s in v["samples"].as_array().unwrap() {
        assert_eq!(s["regular"], true);
        assert_eq!(s["kernel_dim"], 0);
    }
    let ch = "m = 2\nn = 1\nk = 2\nlagrangian = u[1,0]*u[0,1]^2/2 + u[1,1]^2/(2*u[1,0])\n";
    let v = json(regularity_json(ch, 1, 2).unwrap());
    assert_eq!(v["hessian"][1][1], "1/u[1,0]");
    assert!(v["samples"].as_array().unwrap().iter().all(|s| s["regular"] == false));
}
