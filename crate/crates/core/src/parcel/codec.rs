/*
 * Copyright (C) 2026 The andmon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

use thiserror::Error;

use super::{CodecError, MethodSignature, Parcel, SignatureRegistry, TypeDescriptor};
use crate::events::{ArgValue, BinderTransactionRecord, DecodedCall};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarshalError {
    #[error("expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("argument {path}: expected {expected}")]
    TypeMismatch { path: String, expected: TypeDescriptor },
    #[error("no layout registered for composite {0}")]
    UnknownComposite(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnmarshalError {
    /// The interface name itself could not be read.
    #[error("reading interface name: {0}")]
    Header(CodecError),
    #[error("unknown interface {0}")]
    UnknownInterface(String),
    #[error("interface {interface_name} has no method with code {code}")]
    UnknownCode { interface_name: String, code: u32 },
    /// Argument `arg_index` could not be read. Everything after it is lost;
    /// `partial_args` holds the arguments before it.
    #[error("argument {arg_index} of {interface_name}.{method_name}: {cause}")]
    DecodeFailed {
        interface_name: String,
        method_name: String,
        arg_index: usize,
        partial_args: Vec<ArgValue>,
        cause: CodecError,
    },
}

/// Encode a call: interface name first, then each argument in signature
/// order.
pub fn marshal(sig: &MethodSignature, args: &[ArgValue], registry: &SignatureRegistry) -> Result<Parcel, MarshalError> {
    if args.len() != sig.arg_types.len() {
        return Err(MarshalError::ArityMismatch { expected: sig.arg_types.len(), got: args.len() });
    }
    let mut p = Parcel::new();
    p.write_str(&sig.interface_name);
    for (i, (ty, v)) in sig.arg_types.iter().zip(args).enumerate() {
        write_value(&mut p, ty, v, registry, &mut i.to_string())?;
    }
    Ok(p)
}

fn write_value(
    p: &mut Parcel,
    ty: &TypeDescriptor,
    v: &ArgValue,
    registry: &SignatureRegistry,
    path: &mut String,
) -> Result<(), MarshalError> {
    let mismatch = |path: &String| MarshalError::TypeMismatch { path: path.clone(), expected: ty.clone() };
    match (ty, v) {
        (TypeDescriptor::Int32, ArgValue::Int32(x)) => p.write_i32(*x),
        (TypeDescriptor::Int64, ArgValue::Int64(x)) => p.write_i64(*x),
        (TypeDescriptor::Float32, ArgValue::Float32(x)) => p.write_f32(*x),
        (TypeDescriptor::Float64, ArgValue::Float64(x)) => p.write_f64(*x),
        (TypeDescriptor::Bool, ArgValue::Bool(x)) => p.write_bool(*x),
        (TypeDescriptor::Str, ArgValue::Str(s)) => p.write_str(s),
        (TypeDescriptor::Bytes, ArgValue::Bytes(b)) => p.write_bytes(b),
        (TypeDescriptor::Composite(name), ArgValue::Composite { type_name, fields }) if name == type_name => {
            let layout = registry.composite(name).ok_or_else(|| MarshalError::UnknownComposite(name.clone()))?;
            if layout.len() != fields.len() {
                return Err(mismatch(path));
            }
            for (i, (fty, fv)) in layout.iter().zip(fields).enumerate() {
                let len = path.len();
                path.push_str(&format!(".{i}"));
                write_value(p, fty, fv, registry, path)?;
                path.truncate(len);
            }
        }
        _ => return Err(mismatch(path)),
    }
    Ok(())
}

fn read_value(p: &mut Parcel, ty: &TypeDescriptor, registry: &SignatureRegistry) -> Result<ArgValue, CodecError> {
    Ok(match ty {
        TypeDescriptor::Int32 => ArgValue::Int32(p.read_i32()?),
        TypeDescriptor::Int64 => ArgValue::Int64(p.read_i64()?),
        TypeDescriptor::Float32 => ArgValue::Float32(p.read_f32()?),
        TypeDescriptor::Float64 => ArgValue::Float64(p.read_f64()?),
        TypeDescriptor::Bool => ArgValue::Bool(p.read_bool()?),
        TypeDescriptor::Str => ArgValue::Str(p.read_str()?),
        TypeDescriptor::Bytes => ArgValue::Bytes(p.read_bytes()?),
        TypeDescriptor::Composite(name) => {
            let layout = registry.composite(name).ok_or_else(|| CodecError::UnknownComposite(name.clone()))?;
            let fields = layout.iter().map(|f| read_value(p, f, registry)).collect::<Result<Vec<_>, _>>()?;
            ArgValue::Composite { type_name: name.clone(), fields }
        }
    })
}

/// Decode an intercepted transaction. Accepts arbitrary bytes.
pub fn unmarshal(rec: &BinderTransactionRecord, registry: &SignatureRegistry) -> Result<DecodedCall, UnmarshalError> {
    let mut p = Parcel::from_bytes(rec.buffer.as_slice());
    let interface_name = p.read_str().map_err(UnmarshalError::Header)?;
    if !registry.has_interface(&interface_name) {
        return Err(UnmarshalError::UnknownInterface(interface_name));
    }
    let sig = registry
        .lookup(&interface_name, rec.code)
        .ok_or_else(|| UnmarshalError::UnknownCode { interface_name: interface_name.clone(), code: rec.code })?;
    let mut args = Vec::with_capacity(sig.arg_types.len());
    for (i, ty) in sig.arg_types.iter().enumerate() {
        match read_value(&mut p, ty, registry) {
            Ok(v) => args.push(v),
            Err(cause) => {
                return Err(UnmarshalError::DecodeFailed {
                    interface_name,
                    method_name: sig.method_name.clone(),
                    arg_index: i,
                    partial_args: args,
                    cause,
                })
            }
        }
    }
    Ok(DecodedCall {
        sender: rec.sender_euid,
        interface_name,
        method_name: sig.method_name.clone(),
        args,
        timestamp: rec.timestamp,
    })
}

/// Decode many records one after another.
pub fn unmarshal_batch_seq(
    records: &[BinderTransactionRecord],
    registry: &SignatureRegistry,
) -> Vec<Result<DecodedCall, UnmarshalError>> {
    records.iter().map(|r| unmarshal(r, registry)).collect()
}

/// Decode many records on the rayon pool; output order matches input.
#[cfg(feature = "parallel")]
pub fn unmarshal_batch_par(
    records: &[BinderTransactionRecord],
    registry: &SignatureRegistry,
) -> Vec<Result<DecodedCall, UnmarshalError>> {
    use rayon::prelude::*;
    records.par_iter().map(|r| unmarshal(r, registry)).collect()
}

pub fn unmarshal_batch(
    records: &[BinderTransactionRecord],
    registry: &SignatureRegistry,
) -> Vec<Result<DecodedCall, UnmarshalError>> {
    #[cfg(feature = "parallel")]
    {
        unmarshal_batch_par(records, registry)
    }
    #[cfg(not(feature = "parallel"))]
    {
        unmarshal_batch_seq(records, registry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::AppId;
    use TypeDescriptor::*;

    const ISMS: &str = "com.android.internal.telephony.ISms";

    fn registry() -> SignatureRegistry {
        let mut r = SignatureRegistry::new();
        r.register_signature(MethodSignature::new(ISMS, 5, "sendText", vec![Str, Str, Str, Str])).unwrap();
        r.register_signature(MethodSignature::new(
            "com.android.internal.telephony.IPhoneSubInfo",
            1,
            "getDeviceId",
            vec![],
        ))
        .unwrap();
        r.register_composite("LocationRequest", vec![Int32, Int64, Float32, Str]).unwrap();
        r.register_signature(MethodSignature::new(
            "android.location.ILocationManager",
            8,
            "getLastLocation",
            vec![Composite("LocationRequest".into()), Str],
        ))
        .unwrap();
        r
    }

    fn strs(v: &[&str]) -> Vec<ArgValue> {
        v.iter().map(|s| ArgValue::Str(s.to_string())).collect()
    }

    fn record(code: u32, buf: Vec<u8>) -> BinderTransactionRecord {
        BinderTransactionRecord { sender_euid: AppId(10050), code, buffer: buf, timestamp: 7 }
    }

    #[test]
    fn interface_name_first() {
        let r = registry();
        let sig = r.lookup(ISMS, 5).unwrap();
        let p = marshal(sig, &strs(&["123", "", "hi", "com.example"]), &r).unwrap();
        let mut rd = Parcel::from_bytes(p.into_bytes());
        assert_eq!(rd.read_str().unwrap(), ISMS);
    }

    #[test]
    fn zero_arg_is_just_the_interface() {
        let r = registry();
        let sig = r.find_method("com.android.internal.telephony.IPhoneSubInfo", "getDeviceId").unwrap();
        let p = marshal(sig, &[], &r).unwrap();
        let mut only = Parcel::new();
        only.write_str("com.android.internal.telephony.IPhoneSubInfo");
        assert_eq!(p, only);
    }

    #[test]
    fn composite_is_field_concatenation() {
        let r = registry();
        let sig = r.lookup("android.location.ILocationManager", 8).unwrap();
        let req = ArgValue::Composite {
            type_name: "LocationRequest".into(),
            fields: vec![
                ArgValue::Int32(100),
                ArgValue::Int64(60_000),
                ArgValue::Float32(0.5),
                ArgValue::Str("gps".into()),
            ],
        };
        let p = marshal(sig, &[req, ArgValue::Str("pkg".into())], &r).unwrap();
        let mut expected = Parcel::new();
        expected.write_str("android.location.ILocationManager");
        expected.write_i32(100);
        expected.write_i64(60_000);
        expected.write_f32(0.5);
        expected.write_str("gps");
        expected.write_str("pkg");
        assert_eq!(p.as_bytes(), expected.as_bytes());
    }

    #[test]
    fn marshal_errors() {
        let r = registry();
        let sig = r.lookup(ISMS, 5).unwrap();
        assert_eq!(marshal(sig, &strs(&["a"]), &r).unwrap_err(), MarshalError::ArityMismatch { expected: 4, got: 1 });
        let mut args = strs(&["a", "b", "c", "d"]);
        args[2] = ArgValue::Int32(1);
        assert_eq!(
            marshal(sig, &args, &r).unwrap_err(),
            MarshalError::TypeMismatch { path: "2".into(), expected: Str }
        );

        let sig = MethodSignature::new("I", 1, "m", vec![Composite("Nope".into())]);
        let v = ArgValue::Composite { type_name: "Nope".into(), fields: vec![] };
        assert_eq!(marshal(&sig, &[v], &r).unwrap_err(), MarshalError::UnknownComposite("Nope".into()));

        let sig = r.lookup("android.location.ILocationManager", 8).unwrap();
        let short = ArgValue::Composite { type_name: "LocationRequest".into(), fields: vec![ArgValue::Int32(1)] };
        assert!(matches!(
            marshal(sig, &[short, ArgValue::Str("p".into())], &r),
            Err(MarshalError::TypeMismatch { .. })
        ));
        let wrong_field = ArgValue::Composite {
            type_name: "LocationRequest".into(),
            fields: vec![ArgValue::Int32(1), ArgValue::Int32(2), ArgValue::Float32(0.0), ArgValue::Str("g".into())],
        };
        assert_eq!(
            marshal(sig, &[wrong_field, ArgValue::Str("p".into())], &r).unwrap_err(),
            MarshalError::TypeMismatch { path: "0.1".into(), expected: Int64 }
        );
    }

    #[test]
    fn send_text_roundtrip() {
        let r = registry();
        let args = strs(&["123", "", "hello", "com.example"]);
        let p = marshal(r.lookup(ISMS, 5).unwrap(), &args, &r).unwrap();
        let call = unmarshal(&record(5, p.into_bytes()), &r).unwrap();
        assert_eq!(call.method_name, "sendText");
        assert_eq!(call.interface_name, ISMS);
        assert_eq!(call.args, args);
        assert_eq!(call.sender, AppId(10050));
        assert_eq!(call.timestamp, 7);
    }

    #[test]
    fn unknown_code_and_interface() {
        let r = registry();
        let mut p = Parcel::new();
        p.write_str(ISMS);
        assert_eq!(
            unmarshal(&record(999, p.as_bytes().to_vec()), &r).unwrap_err(),
            UnmarshalError::UnknownCode { interface_name: ISMS.into(), code: 999 }
        );
        let mut p = Parcel::new();
        p.write_str("com.example.INothing");
        assert_eq!(
            unmarshal(&record(5, p.into_bytes()), &r).unwrap_err(),
            UnmarshalError::UnknownInterface("com.example.INothing".into())
        );
        assert!(matches!(unmarshal(&record(5, vec![1, 0]), &r), Err(UnmarshalError::Header(_))));
    }

    #[test]
    fn truncated_mid_third_arg() {
        let r = registry();
        let args = strs(&["5551234", "", "hello there", "com.example"]);
        let full = marshal(r.lookup(ISMS, 5).unwrap(), &args, &r).unwrap().into_bytes();
        // offset of arg 2: interface + arg0 + arg1, computed with the primitive writers
        let mut prefix = Parcel::new();
        prefix.write_str(ISMS);
        prefix.write_str("5551234");
        prefix.write_str("");
        let cut = prefix.len() + 6;
        match unmarshal(&record(5, full[..cut].to_vec()), &r).unwrap_err() {
            UnmarshalError::DecodeFailed { arg_index, partial_args, cause, .. } => {
                assert_eq!(arg_index, 2);
                assert_eq!(partial_args, args[..2].to_vec());
                assert!(matches!(cause, CodecError::BufferUnderrun { .. }));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn missing_composite_decoder() {
        let mut r = registry();
        r.register_signature(MethodSignature::new(ISMS, 6, "m", vec![Int32, Composite("Ghost".into())])).unwrap();
        let mut p = Parcel::new();
        p.write_str(ISMS);
        p.write_i32(3);
        match unmarshal(&record(6, p.into_bytes()), &r).unwrap_err() {
            UnmarshalError::DecodeFailed { arg_index: 1, partial_args, cause, .. } => {
                assert_eq!(partial_args, vec![ArgValue::Int32(3)]);
                assert_eq!(cause, CodecError::UnknownComposite("Ghost".into()));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn batch_matches_single() {
        let r = registry();
        let good = marshal(r.lookup(ISMS, 5).unwrap(), &strs(&["1", "2", "3", "4"]), &r).unwrap().into_bytes();
        let recs: Vec<_> =
            (0..50).map(|i| if i % 3 == 0 { record(5, good[..i].to_vec()) } else { record(5, good.clone()) }).collect();
        let expected: Vec<_> = recs.iter().map(|x| unmarshal(x, &r)).collect();
        assert_eq!(unmarshal_batch_seq(&recs, &r), expected);
        assert_eq!(unmarshal_batch(&recs, &r), expected);
    }
}
