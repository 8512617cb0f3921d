//! Synthetic DEX writer.
//!
//! Builds structurally valid DEX files from a list of classes whose methods
//! carry explicit instruction sequences, and records the invoke sites a
//! correct parser must report. Instruction widths here are written out
//! independently of the parser's opcode table.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::invoke::{InvokeKind, InvokeSite, MethodRef};

/// Non-invoke instructions used as filler, with their width in code units.
pub const FILLERS: &[(u8, usize)] = &[
    (0x01, 1), // move
    (0x02, 2), // move/from16
    (0x03, 3), // move/16
    (0x07, 1), // move-object
    (0x0a, 1), // move-result
    (0x0c, 1), // move-result-object
    (0x0f, 1), // return
    (0x12, 1), // const/4
    (0x13, 2), // const/16
    (0x14, 3), // const
    (0x15, 2), // const/high16
    (0x16, 2), // const-wide/16
    (0x17, 3), // const-wide/32
    (0x18, 5), // const-wide
    (0x19, 2), // const-wide/high16
    (0x1a, 2), // const-string
    (0x1b, 3), // const-string/jumbo
    (0x1c, 2), // const-class
    (0x1f, 2), // check-cast
    (0x20, 2), // instance-of
    (0x21, 1), // array-length
    (0x22, 2), // new-instance
    (0x23, 2), // new-array
    (0x24, 3), // filled-new-array
    (0x25, 3), // filled-new-array/range
    (0x27, 1), // throw
    (0x28, 1), // goto
    (0x29, 2), // goto/16
    (0x2a, 3), // goto/32
    (0x2d, 2), // cmpl-float
    (0x32, 2), // if-eq
    (0x38, 2), // if-eqz
    (0x44, 2), // aget
    (0x4b, 2), // aput
    (0x52, 2), // iget
    (0x59, 2), // iput
    (0x60, 2), // sget
    (0x67, 2), // sput
    (0x7b, 1), // neg-int
    (0x90, 2), // add-int
    (0xb0, 1), // add-int/2addr
    (0xd0, 2), // add-int/lit16
    (0xd8, 2), // add-int/lit8
    (0xfe, 2), // const-method-handle
    (0xff, 2), // const-method-type
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Insn {
    /// `nop` with a zero high byte.
    Nop,
    ReturnVoid,
    /// A non-invoke instruction from [`FILLERS`] with random operands.
    Filler { opcode: u8, operands: Vec<u16> },
    /// An invoke on `receiver` (a type descriptor, possibly an array).
    Invoke {
        kind: InvokeKind,
        receiver: String,
        name: String,
        descriptor: String,
    },
    /// invoke-polymorphic (0xfa) or its range form (0xfb).
    Polymorphic { range: bool },
    /// invoke-custom (0xfc) or its range form (0xfd).
    Custom { range: bool },
    /// packed-switch pointing at a payload with `targets` entries.
    PackedSwitch { targets: u16 },
    SparseSwitch { entries: u16 },
    FillArrayData { width: u16, count: u32 },
}

impl Insn {
    pub fn invoke(kind: InvokeKind, target: &MethodRef) -> Insn {
        Insn::Invoke {
            kind,
            receiver: format!("L{};", target.class_path),
            name: target.name.clone(),
            descriptor: target.descriptor.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpec {
    pub name: String,
    pub descriptor: String,
    /// `None` for abstract/native methods.
    pub code: Option<Vec<Insn>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    /// Slash-separated class path, e.g. `com/example/Main`.
    pub class_path: String,
    pub direct_methods: Vec<MethodSpec>,
    pub virtual_methods: Vec<MethodSpec>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDex {
    pub bytes: Vec<u8>,
    /// Sites a correct parser reports, in no particular order.
    pub expected_invokes: Vec<InvokeSite>,
    /// `insns_size` of every emitted code item.
    pub insns_sizes: Vec<u32>,
}

/// Receiver normalization, kept separate from the library's.
fn expected_class(receiver: &str) -> Option<String> {
    let mut s = receiver;
    while let Some(rest) = s.strip_prefix('[') {
        s = rest;
    }
    if s.len() > 2 && s.starts_with('L') && s.ends_with(';') {
        Some(s[1..s.len() - 1].to_string())
    } else {
        None
    }
}

fn split_descriptor(descriptor: &str) -> (Vec<String>, String) {
    let inner = &descriptor[1..];
    let close = inner.find(')').expect("descriptor has `)`");
    let (params, ret) = (&inner[..close], &inner[close + 1..]);
    let mut types = Vec::new();
    let bytes = params.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        while bytes[i] == b'[' {
            i += 1;
        }
        if bytes[i] == b'L' {
            while bytes[i] != b';' {
                i += 1;
            }
        }
        i += 1;
        types.push(params[start..i].to_string());
    }
    (types, ret.to_string())
}

fn shorty(params: &[String], ret: &str) -> String {
    let c = |t: &str| match t.as_bytes()[0] {
        b'[' | b'L' => 'L',
        other => other as char,
    };
    std::iter::once(c(ret)).chain(params.iter().map(|p| c(p))).collect()
}

fn uleb(out: &mut Vec<u8>, mut v: u32) {
    loop {
        let b = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(b);
            return;
        }
        out.push(b | 0x80);
    }
}

fn align4(out: &mut Vec<u8>) {
    while !out.len().is_multiple_of(4) {
        out.push(0);
    }
}

fn put32(out: &mut [u8], at: usize, v: u32) {
    out[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

type ProtoKey = (String, Vec<String>);
type MethodKey = (String, String, ProtoKey);

#[derive(Debug, Clone)]
pub struct DexBuilder {
    pub version: u16,
    pub classes: Vec<ClassSpec>,
    /// Seed for filler operands and payload contents.
    pub seed: u64,
}

impl DexBuilder {
    pub fn new(classes: Vec<ClassSpec>) -> Self {
        DexBuilder {
            version: 35,
            classes,
            seed: 0,
        }
    }

    pub fn build(&self) -> GeneratedDex {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        // Collect every string, type, proto and method reference.
        let mut strings: BTreeSet<String> = BTreeSet::new();
        let mut types: BTreeSet<String> = BTreeSet::new();
        let mut protos: BTreeSet<ProtoKey> = BTreeSet::new();
        let mut methods: BTreeSet<MethodKey> = BTreeSet::new();
        let object = "Ljava/lang/Object;".to_string();
        types.insert(object.clone());

        types.extend(self.classes.iter().map(|c| format!("L{};", c.class_path)));
        let mut add_method = |class: String, name: &str, descriptor: &str| {
            let (params, ret) = split_descriptor(descriptor);
            types.insert(class.clone());
            types.extend(params.iter().cloned());
            types.insert(ret.clone());
            strings.insert(shorty(&params, &ret));
            strings.insert(name.to_string());
            let proto = (ret, params);
            protos.insert(proto.clone());
            methods.insert((class, name.to_string(), proto));
        };
        for class in &self.classes {
            let class_desc = format!("L{};", class.class_path);
            for m in class.direct_methods.iter().chain(&class.virtual_methods) {
                add_method(class_desc.clone(), &m.name, &m.descriptor);
                for insn in m.code.iter().flatten() {
                    if let Insn::Invoke {
                        receiver,
                        name,
                        descriptor,
                        ..
                    } = insn
                    {
                        add_method(receiver.clone(), name, descriptor);
                    }
                }
            }
        }
        strings.extend(types.iter().cloned());

        let strings: Vec<String> = strings.into_iter().collect();
        let string_idx: BTreeMap<&str, u32> = strings
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as u32))
            .collect();
        // Types are sorted by string index; BTreeSet order matches since the
        // string table is sorted too.
        let types: Vec<String> = types.into_iter().collect();
        let type_idx: BTreeMap<&str, u32> = types
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as u32))
            .collect();
        let mut protos: Vec<ProtoKey> = protos.into_iter().collect();
        protos.sort_by_key(|(ret, params)| {
            (
                type_idx[ret.as_str()],
                params.iter().map(|p| type_idx[p.as_str()]).collect::<Vec<_>>(),
            )
        });
        let proto_idx: BTreeMap<ProtoKey, u32> = protos
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        let mut methods: Vec<MethodKey> = methods.into_iter().collect();
        methods.sort_by_key(|(c, n, p)| (type_idx[c.as_str()], string_idx[n.as_str()], proto_idx[p]));
        assert!(methods.len() <= 0x10000, "too many method ids for a 16-bit index");
        let method_idx: BTreeMap<MethodKey, u32> = methods
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as u32))
            .collect();
        let lookup_method = |class: &str, name: &str, descriptor: &str| -> u32 {
            let (params, ret) = split_descriptor(descriptor);
            method_idx[&(class.to_string(), name.to_string(), (ret, params))]
        };

        // Fixed-size tables.
        let header_size = 0x70usize;
        let string_ids_off = header_size;
        let type_ids_off = string_ids_off + 4 * strings.len();
        let proto_ids_off = type_ids_off + 4 * types.len();
        let method_ids_off = proto_ids_off + 12 * protos.len();
        let class_defs_off = method_ids_off + 8 * methods.len();
        let data_off = class_defs_off + 32 * self.classes.len();

        let mut out = vec![0u8; data_off];

        // string_data_item
        for (i, s) in strings.iter().enumerate() {
            let at = out.len();
            put32(&mut out, string_ids_off + 4 * i, at as u32);
            uleb(&mut out, s.encode_utf16().count() as u32);
            out.extend_from_slice(s.as_bytes());
            out.push(0);
        }
        for (i, t) in types.iter().enumerate() {
            put32(&mut out, type_ids_off + 4 * i, string_idx[t.as_str()]);
        }

        // type_list for each proto with parameters
        for (i, (ret, params)) in protos.iter().enumerate() {
            let base = proto_ids_off + 12 * i;
            put32(&mut out, base, string_idx[shorty(params, ret).as_str()]);
            put32(&mut out, base + 4, type_idx[ret.as_str()]);
            if !params.is_empty() {
                align4(&mut out);
                let at = out.len();
                put32(&mut out, base + 8, at as u32);
                out.extend_from_slice(&(params.len() as u32).to_le_bytes());
                for p in params {
                    out.extend_from_slice(&(type_idx[p.as_str()] as u16).to_le_bytes());
                }
            }
        }
        for (i, (class, name, proto)) in methods.iter().enumerate() {
            let base = method_ids_off + 8 * i;
            out[base..base + 2].copy_from_slice(&(type_idx[class.as_str()] as u16).to_le_bytes());
            out[base + 2..base + 4].copy_from_slice(&(proto_idx[proto] as u16).to_le_bytes());
            put32(&mut out, base + 4, string_idx[name.as_str()]);
        }

        // code_items
        let mut expected = Vec::new();
        let mut insns_sizes = Vec::new();
        let mut code_offs: Vec<Vec<(u32, u32)>> = Vec::new(); // per class: (method_idx, code_off)
        let mut code_offs_virtual: Vec<Vec<(u32, u32)>> = Vec::new();
        for class in &self.classes {
            let class_desc = format!("L{};", class.class_path);
            let mut per_kind = [Vec::new(), Vec::new()];
            for (k, list) in [&class.direct_methods, &class.virtual_methods].into_iter().enumerate() {
                for m in list {
                    let idx = lookup_method(&class_desc, &m.name, &m.descriptor);
                    let code_off = match &m.code {
                        None => 0,
                        Some(code) => {
                            align4(&mut out);
                            let at = out.len();
                            let units = encode_code(code, &lookup_method, &mut rng);
                            out.extend_from_slice(&4u16.to_le_bytes()); // registers
                            out.extend_from_slice(&1u16.to_le_bytes()); // ins
                            out.extend_from_slice(&5u16.to_le_bytes()); // outs
                            out.extend_from_slice(&0u16.to_le_bytes()); // tries
                            out.extend_from_slice(&0u32.to_le_bytes()); // debug_info_off
                            out.extend_from_slice(&(units.len() as u32).to_le_bytes());
                            for u in &units {
                                out.extend_from_slice(&u.to_le_bytes());
                            }
                            insns_sizes.push(units.len() as u32);
                            for insn in code {
                                if let Insn::Invoke {
                                    kind,
                                    receiver,
                                    name,
                                    descriptor,
                                } = insn
                                {
                                    if let Some(cp) = expected_class(receiver) {
                                        expected.push(InvokeSite::new(
                                            *kind,
                                            class.class_path.clone(),
                                            MethodRef::new(cp, name.clone(), descriptor.clone()),
                                        ));
                                    }
                                }
                            }
                            at as u32
                        }
                    };
                    per_kind[k].push((idx, code_off));
                }
            }
            let [mut d, mut v] = per_kind;
            d.sort();
            v.sort();
            code_offs.push(d);
            code_offs_virtual.push(v);
        }

        // class_data_item + class_def_item
        for (ci, class) in self.classes.iter().enumerate() {
            let at = out.len();
            let (d, v) = (&code_offs[ci], &code_offs_virtual[ci]);
            uleb(&mut out, 0);
            uleb(&mut out, 0);
            uleb(&mut out, d.len() as u32);
            uleb(&mut out, v.len() as u32);
            for list in [d, v] {
                let mut prev = 0u32;
                for &(idx, code_off) in list {
                    uleb(&mut out, idx - prev);
                    prev = idx;
                    uleb(&mut out, 0x0001);
                    uleb(&mut out, code_off);
                }
            }
            let base = class_defs_off + 32 * ci;
            let class_desc = format!("L{};", class.class_path);
            put32(&mut out, base, type_idx[class_desc.as_str()]);
            put32(&mut out, base + 4, 0x0001);
            put32(&mut out, base + 8, type_idx[object.as_str()]);
            put32(&mut out, base + 16, 0xffff_ffff);
            put32(&mut out, base + 24, if d.is_empty() && v.is_empty() { 0 } else { at as u32 });
        }

        // header
        out[0..8].copy_from_slice(format!("dex\n{:03}\0", self.version).as_bytes());
        let len = out.len() as u32;
        put32(&mut out, 32, len);
        put32(&mut out, 36, header_size as u32);
        put32(&mut out, 40, 0x1234_5678);
        let counts = [
            (56, strings.len(), string_ids_off),
            (64, types.len(), type_ids_off),
            (72, protos.len(), proto_ids_off),
            (88, methods.len(), method_ids_off),
            (96, self.classes.len(), class_defs_off),
        ];
        for (at, n, off) in counts {
            put32(&mut out, at, n as u32);
            put32(&mut out, at + 4, if n == 0 { 0 } else { off as u32 });
        }
        put32(&mut out, 104, len - data_off as u32);
        put32(&mut out, 108, data_off as u32);
        let checksum = adler2::adler32_slice(&out[12..]);
        put32(&mut out, 8, checksum);

        GeneratedDex {
            bytes: out,
            expected_invokes: expected,
            insns_sizes,
        }
    }
}

fn encode_code(
    code: &[Insn],
    lookup_method: &impl Fn(&str, &str, &str) -> u32,
    rng: &mut ChaCha8Rng,
) -> Vec<u16> {
    let mut units: Vec<u16> = Vec::new();
    // (position of the 31t branch unit pair, payload units)
    let mut payloads: Vec<(usize, Vec<u16>)> = Vec::new();
    for insn in code {
        match insn {
            Insn::Nop => units.push(0x0000),
            Insn::ReturnVoid => units.push(0x000e),
            Insn::Filler { opcode, operands } => {
                let hi: u16 = rng.random::<u8>() as u16;
                units.push((hi << 8) | *opcode as u16);
                units.extend_from_slice(operands);
            }
            Insn::Invoke {
                kind,
                receiver,
                name,
                descriptor,
            } => {
                let idx = lookup_method(receiver, name, descriptor) as u16;
                let op = kind.opcode() as u16;
                if kind.is_range() {
                    let count: u16 = rng.random_range(0..=255);
                    units.extend_from_slice(&[(count << 8) | op, idx, rng.random()]);
                } else {
                    let argc: u16 = rng.random_range(0..=5);
                    let g: u16 = rng.random_range(0..16);
                    units.extend_from_slice(&[(argc << 12) | (g << 8) | op, idx, rng.random()]);
                }
            }
            Insn::Polymorphic { range } => {
                let op = if *range { 0xfb } else { 0xfa };
                units.extend_from_slice(&[op, rng.random(), rng.random(), rng.random()]);
            }
            Insn::Custom { range } => {
                let op = if *range { 0xfd } else { 0xfc };
                units.extend_from_slice(&[op, rng.random(), rng.random()]);
            }
            Insn::PackedSwitch { targets } => {
                let at = units.len();
                units.extend_from_slice(&[0x002b, 0, 0]);
                let mut p = vec![0x0100, *targets, rng.random(), rng.random()];
                p.extend((0..*targets as usize * 2).map(|_| rng.random::<u16>()));
                payloads.push((at, p));
            }
            Insn::SparseSwitch { entries } => {
                let at = units.len();
                units.extend_from_slice(&[0x002c, 0, 0]);
                let mut p = vec![0x0200, *entries];
                p.extend((0..*entries as usize * 4).map(|_| rng.random::<u16>()));
                payloads.push((at, p));
            }
            Insn::FillArrayData { width, count } => {
                let at = units.len();
                units.extend_from_slice(&[0x0026, 0, 0]);
                let mut p = vec![0x0300, *width, *count as u16, (*count >> 16) as u16];
                let data_units = (*width as usize * *count as usize).div_ceil(2);
                p.extend((0..data_units).map(|_| rng.random::<u16>()));
                payloads.push((at, p));
            }
        }
    }
    for (at, payload) in payloads {
        if units.len() % 2 == 1 {
            units.push(0x0000);
        }
        let rel = (units.len() - at) as u32;
        units[at + 1] = rel as u16;
        units[at + 2] = (rel >> 16) as u16;
        units.extend(payload);
    }
    units
}

/// A filler instruction with random operands.
pub fn random_filler(rng: &mut impl Rng) -> Insn {
    let (opcode, width) = FILLERS[rng.random_range(0..FILLERS.len())];
    Insn::Filler {
        opcode,
        operands: (1..width).map(|_| rng.random()).collect(),
    }
}

/// One class per distinct caller, each with a single `run()V` method whose
/// body contains the given invokes, in order, separated by filler.
/// Sites with an empty caller go to `com/example/app/Main`.
pub fn dex_from_invokes(sites: &[InvokeSite], seed: u64) -> GeneratedDex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<String, Vec<Insn>> = BTreeMap::new();
    for site in sites {
        let caller = if site.caller_class.is_empty() {
            "com/example/app/Main".to_string()
        } else {
            site.caller_class.clone()
        };
        let body = by_class.entry(caller).or_default();
        if rng.random_bool(0.5) {
            body.push(random_filler(&mut rng));
        }
        body.push(Insn::invoke(site.kind, &site.target));
    }
    if by_class.is_empty() {
        by_class.insert("com/example/app/Main".into(), vec![Insn::Nop]);
    }
    let classes = by_class
        .into_iter()
        .map(|(class_path, mut body)| {
            body.push(Insn::ReturnVoid);
            ClassSpec {
                class_path,
                direct_methods: vec![],
                virtual_methods: vec![MethodSpec {
                    name: "run".into(),
                    descriptor: "()V".into(),
                    code: Some(body),
                }],
            }
        })
        .collect();
    DexBuilder {
        version: 35,
        classes,
        seed,
    }
    .build()
}

const API_TARGETS: &[(&str, &str, &str)] = &[
    ("Ljava/io/FileInputStream;", "read", "([B)I"),
    ("Ljava/io/FileInputStream;", "close", "()V"),
    ("Ljavax/crypto/CipherOutputStream;", "flush", "()V"),
    ("Ljavax/crypto/CipherOutputStream;", "close", "()V"),
    ("Landroid/app/admin/DevicePolicyManager;", "lockNow", "()V"),
    ("Landroid/app/admin/DevicePolicyManager;", "resetPassword", "(Ljava/lang/String;I)Z"),
    ("Ljava/lang/StringBuilder;", "append", "(Ljava/lang/String;)Ljava/lang/StringBuilder;"),
    ("Ljava/lang/StringBuilder;", "<init>", "()V"),
    ("Landroid/widget/Toast;", "makeText", "(Landroid/content/Context;Ljava/lang/CharSequence;I)Landroid/widget/Toast;"),
    ("Ljava/util/ArrayList;", "add", "(Ljava/lang/Object;)Z"),
    ("[Ljava/lang/String;", "clone", "()Ljava/lang/Object;"),
    ("[[Landroid/view/View;", "clone", "()Ljava/lang/Object;"),
    ("[I", "clone", "()Ljava/lang/Object;"),
    ("[[J", "clone", "()Ljava/lang/Object;"),
    ("LFoo;", "bar", "(IJ[B)V"),
];

/// A randomized DEX exercising every invoke kind, payloads, skipped
/// invoke-polymorphic/custom forms, abstract methods and array receivers.
pub fn random_dex(seed: u64) -> GeneratedDex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = rng.random_range(0..8);
    let mut classes = Vec::new();
    for c in 0..n_classes {
        let class_path = format!("com/gen{}/pkg{}/C{c}", seed % 97, rng.random_range(0..3));
        let mut direct = Vec::new();
        let mut virtual_ = Vec::new();
        for m in 0..rng.random_range(0..6) {
            let code = if rng.random_bool(0.15) {
                None
            } else {
                Some(random_body(&mut rng, n_classes, c))
            };
            let spec = MethodSpec {
                name: format!("m{m}"),
                descriptor: ["()V", "(I)V", "(Ljava/lang/String;J)Z", "([BI)I"][m % 4].into(),
                code,
            };
            if rng.random_bool(0.5) {
                direct.push(spec);
            } else {
                virtual_.push(spec);
            }
        }
        classes.push(ClassSpec {
            class_path,
            direct_methods: direct,
            virtual_methods: virtual_,
        });
    }
    // Class paths must be unique.
    let mut seen = BTreeSet::new();
    classes.retain(|c| seen.insert(c.class_path.clone()));
    DexBuilder {
        version: [35, 37, 38, 39][rng.random_range(0..4)],
        classes,
        seed,
    }
    .build()
}

fn random_body(rng: &mut ChaCha8Rng, n_classes: usize, _me: usize) -> Vec<Insn> {
    let mut body = Vec::new();
    for _ in 0..rng.random_range(0..40) {
        let roll = rng.random_range(0..100);
        body.push(match roll {
            0..=39 => random_filler(rng),
            40..=69 => {
                let (recv, name, desc) = API_TARGETS[rng.random_range(0..API_TARGETS.len())];
                Insn::Invoke {
                    kind: InvokeKind::ALL[rng.random_range(0..10)],
                    receiver: recv.into(),
                    name: name.into(),
                    descriptor: desc.into(),
                }
            }
            70..=74 if n_classes > 0 => Insn::Invoke {
                kind: InvokeKind::ALL[rng.random_range(0..10)],
                receiver: format!("Lcom/other/Lib{};", rng.random_range(0..4)),
                name: "helper".into(),
                descriptor: "(I)V".into(),
            },
            75..=79 => Insn::Nop,
            80..=82 => Insn::Polymorphic {
                range: rng.random_bool(0.5),
            },
            83..=85 => Insn::Custom {
                range: rng.random_bool(0.5),
            },
            86..=89 => Insn::PackedSwitch {
                targets: rng.random_range(0..6),
            },
            90..=93 => Insn::SparseSwitch {
                entries: rng.random_range(0..6),
            },
            94..=97 => Insn::FillArrayData {
                width: [1, 2, 4, 8][rng.random_range(0..4)],
                count: rng.random_range(0..9),
            },
            _ => Insn::ReturnVoid,
        });
    }
    body.push(Insn::ReturnVoid);
    body
}

/// A DEX of at least `min_bytes`, built from many classes whose methods mix
/// filler with invokes of `targets`.
pub fn large_dex(min_bytes: usize, targets: &[MethodRef], seed: u64) -> GeneratedDex {
    let methods_per_class = 12;
    let mut n_classes = min_bytes / (methods_per_class * 500) + 1;
    loop {
        let g = large_dex_with(n_classes, methods_per_class, targets, seed);
        if g.bytes.len() >= min_bytes {
            return g;
        }
        n_classes = n_classes * min_bytes / g.bytes.len() + 1;
    }
}

fn large_dex_with(n_classes: usize, methods_per_class: usize, targets: &[MethodRef], seed: u64) -> GeneratedDex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<ClassSpec> = (0..n_classes)
        .map(|c| ClassSpec {
            class_path: format!("com/big/app/p{}/Cls{c}", c % 50),
            direct_methods: vec![],
            virtual_methods: (0..methods_per_class)
                .map(|m| {
                    let mut body = Vec::with_capacity(120);
                    for _ in 0..100 {
                        if rng.random_bool(0.35) {
                            let t = &targets[rng.random_range(0..targets.len())];
                            body.push(Insn::invoke(InvokeKind::ALL[rng.random_range(0..10)], t));
                        } else {
                            body.push(random_filler(&mut rng));
                        }
                    }
                    body.push(Insn::ReturnVoid);
                    MethodSpec {
                        name: format!("m{m}"),
                        descriptor: "(I)V".into(),
                        code: Some(body),
                    }
                })
                .collect(),
        })
        .collect();
    DexBuilder {
        version: 35,
        classes,
        seed,
    }
    .build()
}
