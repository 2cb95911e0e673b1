//! Canonical text form shared by hashing, replay comparison, files and the
//! wire protocol: compact JSON with object keys sorted lexicographically.

use std::borrow::Cow;

use serde::de::DeserializeOwned;
use serde::ser::{
    Error as _, SerializeMap, SerializeSeq, SerializeStruct, SerializeStructVariant, SerializeTuple,
    SerializeTupleStruct, SerializeTupleVariant, Serializer,
};
use serde::Serialize;
use serde_json::Error;
use sha2::{Digest, Sha256};

/// Serializes `value` with sorted keys and no insignificant whitespace.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::with_capacity(256);
    value.serialize(Canon(&mut out)).expect("canonical form is serializable");
    String::from_utf8(out).expect("json is utf-8")
}

pub fn from_canonical_str<T: DeserializeOwned>(s: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(s)
}

/// Lowercase hex SHA-256 of the canonical form.
pub fn canonical_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let digest = Sha256::digest(to_canonical_string(value).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// Writes JSON straight into a buffer. Objects are buffered per entry and
// emitted in key order, which gives the same bytes as serde_json's
// BTreeMap-backed Value without building the tree.
struct Canon<'a>(&'a mut Vec<u8>);

macro_rules! direct {
    ($($f:ident: $t:ty),*) => {
        $(fn $f(self, v: $t) -> Result<(), Error> {
            serde_json::to_writer(&mut *self.0, &v)
        })*
    };
}

impl<'a> Serializer for Canon<'a> {
    type Ok = ();
    type Error = Error;
    type SerializeSeq = Seq<'a>;
    type SerializeTuple = Seq<'a>;
    type SerializeTupleStruct = Seq<'a>;
    type SerializeTupleVariant = Seq<'a>;
    type SerializeMap = Obj<'a>;
    type SerializeStruct = Obj<'a>;
    type SerializeStructVariant = Obj<'a>;

    direct!(serialize_bool: bool, serialize_i8: i8, serialize_i16: i16, serialize_i32: i32, serialize_i64: i64,
        serialize_i128: i128, serialize_u8: u8, serialize_u16: u16, serialize_u32: u32, serialize_u64: u64,
        serialize_u128: u128, serialize_f64: f64, serialize_char: char, serialize_str: &str, serialize_bytes: &[u8]);

    // Value widens f32 to f64 before printing.
    fn serialize_f32(self, v: f32) -> Result<(), Error> {
        self.serialize_f64(v as f64)
    }

    fn serialize_none(self) -> Result<(), Error> {
        self.serialize_unit()
    }

    fn serialize_some<T: Serialize + ?Sized>(self, v: &T) -> Result<(), Error> {
        v.serialize(self)
    }

    fn serialize_unit(self) -> Result<(), Error> {
        self.0.extend_from_slice(b"null");
        Ok(())
    }

    fn serialize_unit_struct(self, _: &'static str) -> Result<(), Error> {
        self.serialize_unit()
    }

    fn serialize_unit_variant(self, _: &'static str, _: u32, variant: &'static str) -> Result<(), Error> {
        self.serialize_str(variant)
    }

    fn serialize_newtype_struct<T: Serialize + ?Sized>(self, _: &'static str, v: &T) -> Result<(), Error> {
        v.serialize(self)
    }

    fn serialize_newtype_variant<T: Serialize + ?Sized>(
        self,
        _: &'static str,
        _: u32,
        variant: &'static str,
        v: &T,
    ) -> Result<(), Error> {
        open_variant(self.0, variant)?;
        v.serialize(Canon(&mut *self.0))?;
        self.0.push(b'}');
        Ok(())
    }

    fn serialize_seq(self, _: Option<usize>) -> Result<Seq<'a>, Error> {
        self.0.push(b'[');
        Ok(Seq {
            out: self.0,
            first: true,
            close: b"]",
        })
    }

    fn serialize_tuple(self, len: usize) -> Result<Seq<'a>, Error> {
        self.serialize_seq(Some(len))
    }

    fn serialize_tuple_struct(self, _: &'static str, len: usize) -> Result<Seq<'a>, Error> {
        self.serialize_seq(Some(len))
    }

    fn serialize_tuple_variant(
        self,
        _: &'static str,
        _: u32,
        variant: &'static str,
        _: usize,
    ) -> Result<Seq<'a>, Error> {
        open_variant(self.0, variant)?;
        self.0.push(b'[');
        Ok(Seq {
            out: self.0,
            first: true,
            close: b"]}",
        })
    }

    fn serialize_map(self, len: Option<usize>) -> Result<Obj<'a>, Error> {
        Ok(Obj::new(self.0, len.unwrap_or(0), false))
    }

    fn serialize_struct(self, _: &'static str, len: usize) -> Result<Obj<'a>, Error> {
        Ok(Obj::new(self.0, len, false))
    }

    fn serialize_struct_variant(
        self,
        _: &'static str,
        _: u32,
        variant: &'static str,
        len: usize,
    ) -> Result<Obj<'a>, Error> {
        open_variant(self.0, variant)?;
        Ok(Obj::new(self.0, len, true))
    }
}

fn open_variant(out: &mut Vec<u8>, variant: &str) -> Result<(), Error> {
    out.push(b'{');
    serde_json::to_writer(&mut *out, variant)?;
    out.push(b':');
    Ok(())
}

struct Seq<'a> {
    out: &'a mut Vec<u8>,
    first: bool,
    close: &'static [u8],
}

impl Seq<'_> {
    fn element<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), Error> {
        if !self.first {
            self.out.push(b',');
        }
        self.first = false;
        v.serialize(Canon(&mut *self.out))
    }

    fn close(self) -> Result<(), Error> {
        self.out.extend_from_slice(self.close);
        Ok(())
    }
}

impl SerializeSeq for Seq<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_element<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), Error> {
        self.element(v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}

impl SerializeTuple for Seq<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_element<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), Error> {
        self.element(v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}

impl SerializeTupleStruct for Seq<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_field<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), Error> {
        self.element(v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}

impl SerializeTupleVariant for Seq<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_field<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), Error> {
        self.element(v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}

struct Obj<'a> {
    out: &'a mut Vec<u8>,
    entries: Vec<(Cow<'static, str>, Vec<u8>)>,
    key: Option<String>,
    variant: bool,
}

impl<'a> Obj<'a> {
    fn new(out: &'a mut Vec<u8>, len: usize, variant: bool) -> Self {
        Self {
            out,
            entries: Vec::with_capacity(len),
            key: None,
            variant,
        }
    }

    fn entry<T: Serialize + ?Sized>(&mut self, key: Cow<'static, str>, v: &T) -> Result<(), Error> {
        let mut buf = Vec::new();
        v.serialize(Canon(&mut buf))?;
        self.entries.push((key, buf));
        Ok(())
    }

    fn close(mut self) -> Result<(), Error> {
        // Stable sort, then the last of equal keys wins as in a map insert.
        self.entries.sort_by(|a, b| a.0.cmp(&b.0));
        self.out.push(b'{');
        let n = self.entries.len();
        let mut first = true;
        for i in 0..n {
            if i + 1 < n && self.entries[i].0 == self.entries[i + 1].0 {
                continue;
            }
            if !first {
                self.out.push(b',');
            }
            first = false;
            let (k, v) = &self.entries[i];
            serde_json::to_writer(&mut *self.out, k.as_ref())?;
            self.out.push(b':');
            self.out.extend_from_slice(v);
        }
        self.out.push(b'}');
        if self.variant {
            self.out.push(b'}');
        }
        Ok(())
    }
}

/// Map keys become strings the way serde_json's Value does it.
fn key_string<T: Serialize + ?Sized>(key: &T) -> Result<String, Error> {
    let mut buf = Vec::new();
    key.serialize(Canon(&mut buf))?;
    match buf.first() {
        Some(b'"') => serde_json::from_slice(&buf),
        Some(b'-' | b'0'..=b'9' | b't' | b'f') => Ok(String::from_utf8(buf).expect("json is utf-8")),
        _ => Err(Error::custom("key must be a string")),
    }
}

impl SerializeMap for Obj<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_key<T: Serialize + ?Sized>(&mut self, key: &T) -> Result<(), Error> {
        self.key = Some(key_string(key)?);
        Ok(())
    }
    fn serialize_value<T: Serialize + ?Sized>(&mut self, v: &T) -> Result<(), Error> {
        let key = self.key.take().ok_or_else(|| Error::custom("value before key"))?;
        self.entry(Cow::Owned(key), v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}

impl SerializeStruct for Obj<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_field<T: Serialize + ?Sized>(&mut self, key: &'static str, v: &T) -> Result<(), Error> {
        self.entry(Cow::Borrowed(key), v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}

impl SerializeStructVariant for Obj<'_> {
    type Ok = ();
    type Error = Error;
    fn serialize_field<T: Serialize + ?Sized>(&mut self, key: &'static str, v: &T) -> Result<(), Error> {
        self.entry(Cow::Borrowed(key), v)
    }
    fn end(self) -> Result<(), Error> {
        self.close()
    }
}
