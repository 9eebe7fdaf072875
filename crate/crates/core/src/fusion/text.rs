//! Byte-level toy tokenizer: ids 0..=255 are raw bytes, plus BOS and EOS.

pub const BOS: usize = 256;
pub const EOS: usize = 257;
pub const VOCAB_SIZE: usize = 258;

/// Bytes of `s` as token ids, without specials.
pub fn encode(s: &str) -> Vec<usize> {
    s.bytes().map(|b| b as usize).collect()
}

/// Bytes of `s` wrapped in BOS .. EOS.
pub fn encode_with_specials(s: &str) -> Vec<usize> {
    let mut ids = Vec::with_capacity(s.len() + 2);
    ids.push(BOS);
    ids.extend(encode(s));
    ids.push(EOS);
    ids
}

/// Lossy decode; specials render as markers.
pub fn decode(ids: &[usize]) -> String {
    let mut bytes = Vec::new();
    let mut out = String::new();
    let flush = |bytes: &mut Vec<u8>, out: &mut String| {
        if !bytes.is_empty() {
            out.push_str(&String::from_utf8_lossy(bytes));
            bytes.clear();
        }
    };
    for &id in ids {
        match id {
            0..=255 => bytes.push(id as u8),
            BOS => {
                flush(&mut bytes, &mut out);
                out.push_str("<bos>");
            }
            EOS => {
                flush(&mut bytes, &mut out);
                out.push_str("<eos>");
            }
            _ => {
                flush(&mut bytes, &mut out);
                out.push_str("<?>");
            }
        }
    }
    flush(&mut bytes, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_ascii() {
        let ids = encode("three blobs");
        assert_eq!(decode(&ids), "three blobs");
        assert!(ids.iter().all(|&i| i < 256));
    }

    #[test]
    fn specials_wrap() {
        let ids = encode_with_specials("x");
        assert_eq!(ids, vec![BOS, 120, EOS]);
        assert_eq!(decode(&ids), "<bos>x<eos>");
    }
}
