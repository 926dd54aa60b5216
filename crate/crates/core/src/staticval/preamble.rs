//! Dummy declarations that let an isolated function compile.
//!
//! Extracted functions reference types, helpers and globals defined
//! elsewhere in their project. Analyzers either refuse such input or drown
//! the interesting findings in parse noise, so we declare every unresolved
//! name with the weakest stub that type-checks:
//!
//! * library calls and types pull in their standard header;
//! * unknown types become `typedef int T;`, or an opaque struct with a stub
//!   field container when members are accessed;
//! * unknown calls get an unprototyped `int f();` declaration;
//! * unknown ALL_CAPS names become enum constants (they often appear in
//!   `case` labels and array bounds), other unknown objects become globals
//!   typed by how they are used.
//!
//! The function text itself is never touched; declarations are prepended.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use tree_sitter::Node;

use crate::astkit::parse::parse_raw;
use crate::astkit::{LanguageHint, ParseError};

/// Declarations prepended to a function, and the resulting text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HelperPreamble {
    pub declarations: Vec<String>,
    pub source_with_preamble: String,
    /// Lines occupied by the preamble; analyzer line numbers past this
    /// offset map back to the original function.
    pub preamble_lines: usize,
    /// Constructs the synthesizer could not resolve (currently: syntax
    /// errors in the input).
    pub unresolved: Vec<String>,
}

/// How a stubbed field or global is used, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Usage {
    Scalar,
    Pointer,
    Function,
    /// Member access through the value; `true` when accessed with `->`.
    Record(bool),
}

fn merge(a: Usage, b: Usage) -> Usage {
    match (a, b) {
        (Usage::Record(x), Usage::Record(y)) => Usage::Record(x || y),
        _ => a.max(b),
    }
}

/// A struct we define ourselves.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Container {
    /// `struct tag`, referenced by the function but never defined.
    Tag(String),
    /// Unknown typedef name used with member access.
    Typedef(String),
    /// Anonymous nested record reached through a stubbed field.
    Nested(Box<Container>, String),
    /// Record type of an undeclared global.
    Object(String),
}

impl Container {
    fn tag(&self) -> String {
        match self {
            Container::Tag(t) | Container::Typedef(t) => t.clone(),
            Container::Nested(parent, field) => format!("{}_{}", parent.flat(), field),
            Container::Object(o) => format!("rrs_{o}"),
        }
    }

    fn flat(&self) -> String {
        match self {
            Container::Tag(t) | Container::Typedef(t) => format!("rrs_{t}"),
            Container::Nested(parent, field) => format!("{}_{}", parent.flat(), field),
            Container::Object(o) => format!("rrs_{o}"),
        }
    }
}

#[derive(Default)]
struct Declared {
    types: BTreeSet<String>,
    defined_tags: BTreeSet<String>,
    functions: BTreeSet<String>,
    objects: BTreeSet<String>,
    includes: BTreeSet<String>,
}

/// Base type of a declared variable, if it is one we may need to stub.
#[derive(Debug, Clone)]
enum VarBase {
    Typedef(String),
    Tag(String),
}

#[derive(Default)]
struct Needs {
    includes: BTreeSet<&'static str>,
    types: BTreeSet<String>,
    referenced_tags: BTreeSet<String>,
    functions: BTreeSet<String>,
    objects: BTreeMap<String, Usage>,
    constants: BTreeSet<String>,
    fields: BTreeMap<Container, BTreeMap<String, Usage>>,
}

/// Builds the preamble for `source`. Already-declared names are skipped,
/// so running this on its own output adds nothing.
pub fn synthesize_preamble(source: &str, hint: LanguageHint) -> Result<HelperPreamble, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::EmptySource);
    }
    let tree = parse_raw(source, hint)?;
    let root = tree.root_node();
    let text = |n: Node<'_>| source[n.byte_range()].to_string();

    let mut declared = Declared::default();
    let mut vars: BTreeMap<String, VarBase> = BTreeMap::new();
    collect_declared(root, source, &mut declared, &mut vars);

    let mut needs = Needs::default();
    let mut unresolved = Vec::new();
    walk(root, &mut |node, field| {
        if node.is_error() || node.is_missing() {
            let (row, col) = (node.start_position().row + 1, node.start_position().column + 1);
            unresolved.push(format!("syntax error at {row}:{col}"));
        }
        match node.kind() {
            "primitive_type" => {
                if let Some(h) = header_for_type(&text(node)) {
                    needs.includes.insert(h);
                }
            }
            "type_identifier" => {
                let name = text(node);
                let in_typedef_name = field == Some("declarator")
                    && node.parent().is_some_and(|p| p.kind() == "type_definition");
                let is_tag = node.parent().is_some_and(|p| is_tagged(p.kind())) && field == Some("name");
                if in_typedef_name || is_tag || declared.types.contains(&name) {
                    return;
                }
                match header_for_type(&name) {
                    Some(h) => {
                        needs.includes.insert(h);
                    }
                    None => {
                        needs.types.insert(name);
                    }
                }
            }
            "struct_specifier" | "union_specifier" => {
                // every undefined tag gets a complete definition: sizeof(*p)
                // and by-value declarations need one, and a tag first seen in
                // a parameter list would otherwise have prototype scope
                if node.child_by_field_name("body").is_none() {
                    if let Some(name) = node.child_by_field_name("name").map(text) {
                        if !declared.defined_tags.contains(&name) {
                            needs.referenced_tags.insert(name);
                        }
                    }
                }
            }
            "call_expression" => {
                let Some(f) = node.child_by_field_name("function") else { return };
                if f.kind() != "identifier" {
                    return;
                }
                let name = text(f);
                if declared.functions.contains(&name) || declared.objects.contains(&name) {
                    return;
                }
                match header_for_function(&name) {
                    Some(h) => {
                        needs.includes.insert(h);
                    }
                    None => {
                        needs.functions.insert(name);
                    }
                }
            }
            "identifier" => {
                if !is_object_use(node, field) {
                    return;
                }
                let name = text(node);
                if declared.objects.contains(&name) || declared.functions.contains(&name) {
                    return;
                }
                if let Some(h) = header_for_object(&name) {
                    needs.includes.insert(h);
                } else if is_constant_name(&name) {
                    needs.constants.insert(name);
                } else {
                    let usage = usage_of(node);
                    let slot = needs.objects.entry(name).or_insert(usage);
                    *slot = merge(*slot, usage);
                }
            }
            "field_expression" => {
                let Some(arg) = node.child_by_field_name("argument") else { return };
                let Some(field_name) = node.child_by_field_name("field").map(text) else { return };
                let Some(owner) = container_of(arg, source, &declared, &vars) else { return };
                let usage = usage_of(node);
                let slot = needs.fields.entry(owner).or_default().entry(field_name).or_insert(usage);
                *slot = merge(*slot, usage);
            }
            _ => {}
        }
    });

    let declarations = render(&needs, &declared);
    let preamble_lines = declarations.len() + usize::from(!declarations.is_empty());
    let source_with_preamble = if declarations.is_empty() {
        source.to_string()
    } else {
        format!("{}\n\n{}", declarations.join("\n"), source)
    };
    Ok(HelperPreamble { declarations, source_with_preamble, preamble_lines, unresolved })
}

fn is_tagged(kind: &str) -> bool {
    matches!(kind, "struct_specifier" | "union_specifier" | "enum_specifier")
}

/// Pre-order walk passing each node's field name within its parent.
fn walk<'a>(root: Node<'a>, f: &mut impl FnMut(Node<'a>, Option<&'a str>)) {
    fn go<'a>(node: Node<'a>, field: Option<&'a str>, f: &mut impl FnMut(Node<'a>, Option<&'a str>)) {
        f(node, field);
        for i in 0..node.child_count() {
            if let Some(child) = node.child(i) {
                go(child, node.field_name_for_child(i), f);
            }
        }
    }
    go(root, None, f);
}

/// Innermost identifier named by a declarator.
fn declarator_name<'a>(mut node: Node<'a>) -> Option<Node<'a>> {
    loop {
        match node.kind() {
            "identifier" | "type_identifier" | "field_identifier" => return Some(node),
            _ => node = node.child_by_field_name("declarator")?,
        }
    }
}

fn collect_declared(root: Node<'_>, source: &str, out: &mut Declared, vars: &mut BTreeMap<String, VarBase>) {
    let text = |n: Node<'_>| source[n.byte_range()].to_string();
    walk(root, &mut |node, _| match node.kind() {
        "preproc_include" => {
            if let Some(p) = node.child_by_field_name("path") {
                out.includes.insert(text(p));
            }
        }
        "preproc_def" | "preproc_function_def" => {
            if let Some(n) = node.child_by_field_name("name") {
                out.objects.insert(text(n));
                out.functions.insert(text(n));
            }
        }
        "type_definition" => {
            let mut c = node.walk();
            for d in node.children_by_field_name("declarator", &mut c) {
                if let Some(n) = declarator_name(d) {
                    out.types.insert(text(n));
                }
            }
        }
        "struct_specifier" | "union_specifier" | "enum_specifier" => {
            if node.child_by_field_name("body").is_some() {
                if let Some(n) = node.child_by_field_name("name") {
                    out.defined_tags.insert(text(n));
                }
            }
        }
        "enumerator" => {
            if let Some(n) = node.child_by_field_name("name") {
                out.objects.insert(text(n));
            }
        }
        "function_definition" => {
            if let Some(n) = node.child_by_field_name("declarator").and_then(declarator_name) {
                out.functions.insert(text(n));
            }
        }
        "declaration" | "parameter_declaration" => {
            let base = node.child_by_field_name("type").and_then(|t| match t.kind() {
                "type_identifier" => Some(VarBase::Typedef(text(t))),
                "struct_specifier" | "union_specifier" => {
                    t.child_by_field_name("name").map(|n| VarBase::Tag(text(n)))
                }
                _ => None,
            });
            let mut c = node.walk();
            for d in node.children_by_field_name("declarator", &mut c) {
                let is_fn = has_function_declarator(d);
                let Some(n) = declarator_name(d) else { continue };
                let name = text(n);
                if is_fn {
                    out.functions.insert(name);
                } else {
                    if let Some(b) = &base {
                        vars.insert(name.clone(), b.clone());
                    }
                    out.objects.insert(name);
                }
            }
        }
        _ => {}
    });
}

fn has_function_declarator(mut node: Node<'_>) -> bool {
    loop {
        if node.kind() == "function_declarator" {
            return true;
        }
        match node.child_by_field_name("declarator") {
            Some(d) if node.kind() != "parenthesized_declarator" => node = d,
            _ => return false,
        }
    }
}

/// Whether a bodiless struct specifier declares something by value.
/// Identifiers in expression position (not declarators, labels or callees).
fn is_object_use(node: Node<'_>, field: Option<&str>) -> bool {
    let Some(parent) = node.parent() else { return false };
    match (parent.kind(), field) {
        ("call_expression", Some("function")) => false,
        (_, Some("declarator")) => false,
        (_, Some("name")) => false,
        ("preproc_def" | "preproc_function_def" | "preproc_params", _) => false,
        ("enumerator", _) => false,
        _ => true,
    }
}

/// How the value of `node` is consumed by its parent expression.
fn usage_of(node: Node<'_>) -> Usage {
    let Some(parent) = node.parent() else { return Usage::Scalar };
    let is_arg = |p: Node<'_>| p.child_by_field_name("argument").is_some_and(|a| a.id() == node.id());
    match parent.kind() {
        "field_expression" if is_arg(parent) => {
            let arrow = parent.child_by_field_name("operator").is_some_and(|o| o.kind() == "->");
            Usage::Record(arrow)
        }
        "call_expression" if parent.child_by_field_name("function").is_some_and(|f| f.id() == node.id()) => {
            Usage::Function
        }
        "subscript_expression" if is_arg(parent) => match usage_of(parent) {
            Usage::Record(_) => Usage::Record(true),
            _ => Usage::Pointer,
        },
        "pointer_expression" if is_arg(parent) => {
            let deref = parent.child_by_field_name("operator").is_some_and(|o| o.kind() == "*");
            if deref {
                match usage_of(parent) {
                    Usage::Record(_) => Usage::Record(true),
                    _ => Usage::Pointer,
                }
            } else {
                Usage::Scalar
            }
        }
        "parenthesized_expression" => usage_of(parent),
        _ => Usage::Scalar,
    }
}

/// The stub struct whose member `arg.field` / `arg->field` refers to, when
/// that struct is one we are responsible for.
fn container_of(arg: Node<'_>, source: &str, declared: &Declared, vars: &BTreeMap<String, VarBase>) -> Option<Container> {
    let text = |n: Node<'_>| source[n.byte_range()].to_string();
    match arg.kind() {
        "identifier" => {
            let name = text(arg);
            match vars.get(&name) {
                Some(VarBase::Typedef(t)) if !declared.types.contains(t) && header_for_type(t).is_none() => {
                    Some(Container::Typedef(t.clone()))
                }
                Some(VarBase::Tag(t)) if !declared.defined_tags.contains(t) => Some(Container::Tag(t.clone())),
                Some(_) => None,
                None if !declared.objects.contains(&name) && !is_constant_name(&name) => {
                    Some(Container::Object(name))
                }
                None => None,
            }
        }
        "field_expression" => {
            let owner = container_of(arg.child_by_field_name("argument")?, source, declared, vars)?;
            let field = text(arg.child_by_field_name("field")?);
            Some(Container::Nested(Box::new(owner), field))
        }
        "parenthesized_expression" => container_of(arg.named_child(0)?, source, declared, vars),
        "subscript_expression" | "pointer_expression" => {
            container_of(arg.child_by_field_name("argument")?, source, declared, vars)
        }
        _ => None,
    }
}

fn is_constant_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && name.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
        && name.len() > 1
}

fn field_decl(name: &str, usage: Usage, owner: &Container) -> String {
    match usage {
        Usage::Scalar => format!("int {name};"),
        Usage::Pointer => format!("int *{name};"),
        Usage::Function => format!("int (*{name})();"),
        Usage::Record(ptr) => {
            let nested = Container::Nested(Box::new(owner.clone()), name.to_string());
            format!("struct {} {}{name};", nested.tag(), if ptr { "*" } else { "" })
        }
    }
}

fn render(needs: &Needs, declared: &Declared) -> Vec<String> {
    let mut out = Vec::new();
    for h in &needs.includes {
        if !declared.includes.contains(*h) {
            out.push(format!("#include {h}"));
        }
    }

    // every container reachable from a recorded field, including nested
    // records that received no members of their own
    let mut containers: BTreeMap<Container, BTreeMap<String, Usage>> = needs.fields.clone();
    for (owner, fields) in &needs.fields {
        for (name, usage) in fields {
            if let Usage::Record(_) = usage {
                containers.entry(Container::Nested(Box::new(owner.clone()), name.clone())).or_default();
            }
        }
    }
    for (name, usage) in &needs.objects {
        if let Usage::Record(_) = usage {
            containers.entry(Container::Object(name.clone())).or_default();
        }
    }
    for tag in &needs.referenced_tags {
        containers.entry(Container::Tag(tag.clone())).or_default();
    }

    // types: plain and opaque typedefs, alphabetical
    let record_typedefs: BTreeSet<&String> =
        containers.keys().filter_map(|c| if let Container::Typedef(t) = c { Some(t) } else { None }).collect();
    for t in &needs.types {
        if record_typedefs.contains(t) {
            out.push(format!("typedef struct {t} {t};"));
        } else {
            out.push(format!("typedef int {t};"));
        }
    }

    // containers: by-value members must be complete first
    let mut emitted = BTreeSet::new();
    for c in containers.keys() {
        emit_container(c, &containers, &mut emitted, &mut out);
    }

    for f in &needs.functions {
        out.push(format!("int {f}();"));
    }
    for (i, c) in needs.constants.iter().enumerate() {
        out.push(format!("enum {{ {c} = {} }};", 4096 + i));
    }
    for (name, usage) in &needs.objects {
        out.push(match usage {
            Usage::Scalar => format!("int {name};"),
            Usage::Pointer => format!("int *{name};"),
            Usage::Function => format!("int {name}();"),
            Usage::Record(ptr) => {
                format!("struct {} {}{name};", Container::Object(name.clone()).tag(), if *ptr { "*" } else { "" })
            }
        });
    }
    out
}

fn emit_container(
    c: &Container,
    all: &BTreeMap<Container, BTreeMap<String, Usage>>,
    emitted: &mut BTreeSet<Container>,
    out: &mut Vec<String>,
) {
    if !emitted.insert(c.clone()) {
        return;
    }
    let empty = BTreeMap::new();
    let fields = all.get(c).unwrap_or(&empty);
    for (name, usage) in fields {
        if *usage == Usage::Record(false) {
            emit_container(&Container::Nested(Box::new(c.clone()), name.clone()), all, emitted, out);
        }
    }
    let body: Vec<String> = if fields.is_empty() {
        vec!["int rrs_unused;".to_string()]
    } else {
        fields.iter().map(|(n, u)| field_decl(n, *u, c)).collect()
    };
    out.push(format!("struct {} {{ {} }};", c.tag(), body.join(" ")));
}

fn header_for_type(name: &str) -> Option<&'static str> {
    Some(match name {
        "size_t" | "ptrdiff_t" => "<stddef.h>",
        "ssize_t" | "off_t" | "pid_t" | "mode_t" | "uid_t" | "gid_t" => "<sys/types.h>",
        "int8_t" | "int16_t" | "int32_t" | "int64_t" | "uint8_t" | "uint16_t" | "uint32_t" | "uint64_t"
        | "intptr_t" | "uintptr_t" | "intmax_t" | "uintmax_t" => "<stdint.h>",
        "bool" => "<stdbool.h>",
        "FILE" => "<stdio.h>",
        "va_list" => "<stdarg.h>",
        "time_t" => "<time.h>",
        "wchar_t" => "<wchar.h>",
        _ => return None,
    })
}

fn header_for_function(name: &str) -> Option<&'static str> {
    Some(match name {
        "malloc" | "calloc" | "realloc" | "free" | "abort" | "exit" | "atoi" | "atol" | "strtol" | "strtoul"
        | "strtoll" | "strtoull" | "qsort" | "getenv" | "abs" => "<stdlib.h>",
        "memcpy" | "memmove" | "memset" | "memcmp" | "memchr" | "strlen" | "strnlen" | "strcpy" | "strncpy"
        | "strcat" | "strncat" | "strcmp" | "strncmp" | "strchr" | "strrchr" | "strstr" | "strdup" | "strndup"
        | "strerror" | "strtok" => "<string.h>",
        "printf" | "fprintf" | "sprintf" | "snprintf" | "vsnprintf" | "vfprintf" | "puts" | "fputs" | "putchar"
        | "fputc" | "fgets" | "fgetc" | "getc" | "getchar" | "fopen" | "fclose" | "fread" | "fwrite" | "fflush"
        | "fseek" | "ftell" | "perror" | "sscanf" | "scanf" | "fscanf" => "<stdio.h>",
        "assert" => "<assert.h>",
        "isdigit" | "isalpha" | "isalnum" | "isspace" | "isupper" | "islower" | "isprint" | "isxdigit"
        | "toupper" | "tolower" => "<ctype.h>",
        "va_start" | "va_end" | "va_arg" | "va_copy" => "<stdarg.h>",
        "open" | "fcntl" => "<fcntl.h>",
        "read" | "write" | "close" | "lseek" | "unlink" => "<unistd.h>",
        _ => return None,
    })
}

fn header_for_object(name: &str) -> Option<&'static str> {
    Some(match name {
        "NULL" => "<stddef.h>",
        "stdin" | "stdout" | "stderr" | "EOF" | "BUFSIZ" => "<stdio.h>",
        "errno" | "EINVAL" | "ENOMEM" | "EIO" | "ENOENT" | "EAGAIN" | "EPERM" | "EFAULT" | "ERANGE" | "EEXIST"
        | "EBUSY" | "ENOSPC" | "EOVERFLOW" | "ENOSYS" | "EACCES" | "EBADF" | "EINTR" => "<errno.h>",
        "INT_MAX" | "INT_MIN" | "UINT_MAX" | "LONG_MAX" | "LONG_MIN" | "ULONG_MAX" | "CHAR_BIT" | "CHAR_MAX"
        | "SHRT_MAX" | "USHRT_MAX" => "<limits.h>",
        "SIZE_MAX" | "UINT8_MAX" | "UINT16_MAX" | "UINT32_MAX" | "UINT64_MAX" | "INT32_MAX" | "INT64_MAX" => {
            "<stdint.h>"
        }
        "EXIT_SUCCESS" | "EXIT_FAILURE" => "<stdlib.h>",
        _ => return None,
    })
}
