"""Lightweight Java-subset parsing, AST diffing, and repair categorization.

The parser is total: anything it does not understand collapses into an opaque
statement node, so it never fails on real-world test code. The tree diff
computes a minimal edit script under subtree-granular operations (insert or
delete a whole subtree, or update one node's label), which keeps edit counts
aligned with how a reviewer would describe a repair.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Node kinds
METHOD_DECL = "method_decl"
INVOCATION = "invocation"
ARGUMENT = "argument"
LITERAL = "literal"
IDENTIFIER = "identifier"
ASSERTION = "assertion"
ANNOTATION_ARG = "annotation_arg"
BLOCK = "block"
STATEMENT = "statement"

ASSERTION_PREFIXES = ("assert", "expect", "fail")
EXPECTED_EXCEPTION_ARGS = ("expected", "expectedExceptions")


@dataclass(frozen=True)
class MiniNode:
    kind: str
    label: str = ""
    children: tuple["MiniNode", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def signature(self) -> tuple:
        """Structural identity: kinds plus invocation names, free of
        identifier and literal spellings (used by the syntax metric)."""
        name = self.label if self.kind in (INVOCATION, ASSERTION) else ""
        return (self.kind, name, tuple(c.signature() for c in self.children))

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


_LITERAL_RE = re.compile(
    r"^(\d[\d_]*\.?\d*[fFdDlL]?|0x[0-9a-fA-F]+|\".*\"|'.*'|true|false|null)$"
)
_IDENT_CHAIN_RE = re.compile(r"^[A-Za-z_$][\w$]*(\.[A-Za-z_$][\w$]*)*(\.class)?$")
_METHOD_DECL_RE = re.compile(
    r"^\s*(?:@\w+\s+)*(?:(?:public|protected|private|static|final|abstract|"
    r"synchronized|native|default)\s+)*(?:<[^>]+>\s+)?[\w$<>\[\],.\s]*?"
    r"([A-Za-z_$][\w$]*)\s*\(([^)]*)\)\s*(?:throws\s+[\w.,\s]+)?\s*\{"
)
_ANNOTATION_RE = re.compile(r"^\s*@([A-Za-z_$][\w$]*)\s*(\((.*)\))?\s*$")


def _is_assertion_name(name: str) -> bool:
    simple = name.split(".")[-1]
    if simple.startswith("new "):
        return False
    return simple.startswith(ASSERTION_PREFIXES)


class _LineParser:
    """Recursive-descent scan of one statement line."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _peek_word(self) -> str | None:
        match = re.match(r"\s*([A-Za-z_$][\w$]*(?:\s*\.\s*[A-Za-z_$][\w$]*)*)",
                         self.text[self.pos:])
        return match.group(1) if match else None

    def parse_atoms(self, stop_chars: str = "") -> list[MiniNode]:
        atoms: list[MiniNode] = []
        depth = 0
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if depth == 0 and ch in stop_chars:
                break
            if ch == "(":
                depth += 1
                self.pos += 1
                continue
            if ch == ")":
                if depth == 0:
                    break
                depth -= 1
                self.pos += 1
                continue
            match = re.match(
                r"new\s+([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)\s*\(",
                self.text[self.pos:],
            )
            if match:
                self.pos += match.end()
                args = self._parse_args()
                atoms.append(
                    MiniNode(INVOCATION, "new " + match.group(1).split(".")[-1], tuple(args))
                )
                continue
            match = re.match(
                r"([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)\s*\(", self.text[self.pos:]
            )
            if match:
                name = match.group(1).split(".")[-1]
                self.pos += match.end()
                args = self._parse_args()
                kind = ASSERTION if _is_assertion_name(name) else INVOCATION
                atoms.append(MiniNode(kind, name, tuple(args)))
                continue
            match = re.match(
                r"(\d[\dxX_a-fA-F]*\.?\d*[fFdDlL]?|\"(?:\\.|[^\"])*\"|'(?:\\.|[^'])?')",
                self.text[self.pos:],
            )
            if match:
                atoms.append(MiniNode(LITERAL, match.group(1)))
                self.pos += match.end()
                continue
            match = re.match(
                r"([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*(?:\.class)?)",
                self.text[self.pos:],
            )
            if match:
                word = match.group(1)
                if word in ("true", "false", "null"):
                    atoms.append(MiniNode(LITERAL, word))
                else:
                    atoms.append(MiniNode(IDENTIFIER, word))
                self.pos += match.end()
                continue
            self.pos += 1
        return atoms

    def _parse_args(self) -> list[MiniNode]:
        args: list[MiniNode] = []
        while True:
            start = self.pos
            atoms = self.parse_atoms(stop_chars=",)")
            text_piece = self.text[start : self.pos].strip()
            if atoms or text_piece:
                args.append(MiniNode(ARGUMENT, "", tuple(atoms)))
            if self.pos < len(self.text) and self.text[self.pos] == ",":
                self.pos += 1
                continue
            if self.pos < len(self.text) and self.text[self.pos] == ")":
                self.pos += 1
            break
        return args


def _parse_annotation(line: str) -> MiniNode | None:
    match = _ANNOTATION_RE.match(line)
    if not match:
        return None
    name, _, body = match.groups()
    children: list[MiniNode] = []
    if body:
        for piece in _split_top_level(body, ","):
            if "=" in piece:
                key, value = piece.split("=", 1)
                children.append(
                    MiniNode(ANNOTATION_ARG, f"{key.strip()}={value.strip()}")
                )
            elif piece.strip():
                children.append(MiniNode(ANNOTATION_ARG, f"value={piece.strip()}"))
    return MiniNode(STATEMENT, f"@{name}", tuple(children))


def _split_top_level(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_statement(line: str) -> MiniNode:
    """Parse one line into a statement node; unknown shapes become opaque."""
    stripped = line.strip()
    collapsed = " ".join(stripped.split())
    annotation = _parse_annotation(stripped)
    if annotation is not None:
        return annotation
    decl = _METHOD_DECL_RE.match(stripped)
    if decl and "=" not in stripped.split("(")[0] and "." not in stripped.split("(")[0]:
        return MiniNode(METHOD_DECL, decl.group(1))
    parser = _LineParser(stripped)
    atoms = parser.parse_atoms()
    if atoms:
        return MiniNode(STATEMENT, "", tuple(atoms))
    return MiniNode(STATEMENT, collapsed)


def parse_mini(lines: list[str]) -> MiniNode:
    """Total parser: a block of per-line statement trees."""
    children = [parse_statement(line) for line in lines if line.strip()]
    return MiniNode(BLOCK, "", tuple(children))


def node_label_multiset(tree: MiniNode) -> dict[tuple[str, str], int]:
    counts: dict[tuple[str, str], int] = {}
    for node in tree.walk():
        key = (node.kind, node.label)
        counts[key] = counts.get(key, 0) + 1
    return counts


# --------------------------------------------------------------------------
# Tree edit script
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EditAction:
    op: str  # insert | delete | update
    node: MiniNode
    new_label: str = ""
    ancestors: tuple[tuple[str, str, str], ...] = ()  # (kind, old_label, new_label)


def tree_edit_actions(broken: MiniNode, repaired: MiniNode) -> list[EditAction]:
    """Minimal edit script turning broken into repaired.

    Operations are subtree-granular: inserting or deleting a whole subtree is
    one action and updating a node's label is one action. Matched nodes keep
    their kind; differing kinds force a delete+insert pair.
    """
    memo: dict[tuple[int, int], tuple[int, tuple]] = {}

    def dist(a: MiniNode, b: MiniNode) -> tuple[int, tuple]:
        key = (id(a), id(b))
        if key in memo:
            return memo[key]
        if a == b:
            memo[key] = (0, ())
            return memo[key]
        if a.kind != b.kind:
            result = (2, (("delete", a, None, ()), ("insert", b, None, ())))
            memo[key] = result
            return result
        root_actions: tuple = ()
        cost = 0
        if a.label != b.label:
            cost = 1
            root_actions = (("update", a, b.label, ()),)
        child_cost, child_actions = align(a.children, b.children)
        here = (a.kind, a.label, b.label)
        wrapped = tuple(
            (op, node, new_label, (here,) + anc)
            for op, node, new_label, anc in child_actions
        )
        memo[key] = (cost + child_cost, root_actions + wrapped)
        return memo[key]

    def align(xs: tuple[MiniNode, ...], ys: tuple[MiniNode, ...]) -> tuple[int, tuple]:
        n, m = len(xs), len(ys)
        table: list[list[tuple[int, tuple]]] = [
            [(0, ())] * (m + 1) for _ in range(n + 1)
        ]
        for i in range(1, n + 1):
            prev_cost, prev_actions = table[i - 1][0]
            table[i][0] = (prev_cost + 1, prev_actions + (("delete", xs[i - 1], None, ()),))
        for j in range(1, m + 1):
            prev_cost, prev_actions = table[0][j - 1]
            table[0][j] = (prev_cost + 1, prev_actions + (("insert", ys[j - 1], None, ()),))
        for i in range(1, n + 1):
            for j in range(1, m + 1):
                del_cost, del_actions = table[i - 1][j]
                ins_cost, ins_actions = table[i][j - 1]
                sub_cost, sub_actions = dist(xs[i - 1], ys[j - 1])
                match_cost, match_actions = table[i - 1][j - 1]
                options = [
                    (match_cost + sub_cost, match_actions + sub_actions),
                    (del_cost + 1, del_actions + (("delete", xs[i - 1], None, ()),)),
                    (ins_cost + 1, ins_actions + (("insert", ys[j - 1], None, ()),)),
                ]
                table[i][j] = min(options, key=lambda opt: opt[0])
        return table[n][m]

    _, raw = dist(broken, repaired)
    return [
        EditAction(op=op, node=node, new_label=new_label or "", ancestors=anc)
        for op, node, new_label, anc in raw
    ]


# --------------------------------------------------------------------------
# Categorization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RepairCategory:
    categories: frozenset[str]
    other: bool
    ast_edit_count: int

    def label(self) -> str:
        if self.other:
            return "OTH"
        if not self.categories:
            return "NONE"
        return "+".join(sorted(self.categories))


_DECL_RE = re.compile(
    r"^\s*(?:final\s+)?([A-Za-z_$][\w$<>\[\],.]*)\s+([A-Za-z_$][\w$]*)\s*=\s*(.+)$"
)


def _decl_types(lines: list[str]) -> dict[str, tuple[str, str]]:
    """var name -> (declared type, invocation name) for result-assignments."""
    out: dict[str, tuple[str, str]] = {}
    for line in lines:
        match = _DECL_RE.match(line.strip().rstrip(";"))
        if not match:
            continue
        decl_type, name, rhs = match.groups()
        call = re.search(r"([A-Za-z_$][\w$]*)\s*\(", rhs)
        if call:
            out[name] = (decl_type, call.group(1))
    return out


def _subtree_has_invocation(node: MiniNode) -> bool:
    return any(n.kind in (INVOCATION, ASSERTION) for n in node.walk())


def _subtree_has_assertion(node: MiniNode) -> bool:
    return any(
        n.kind == ASSERTION
        or (n.kind == ANNOTATION_ARG and n.label.split("=")[0] in EXPECTED_EXCEPTION_ARGS)
        for n in node.walk()
    )


def categorize(broken_lines: list[str], repaired_lines: list[str]) -> RepairCategory:
    """Assign ARG/INV/ORC (combinations allowed) from the AST edit script.

    ARG: a kept invocation's argument list changed, or the declared type
    receiving its result changed. INV: an invocation appeared, disappeared,
    or was renamed. ORC: a change touches an assertion or an
    expected-exception construct.
    """
    broken_tree = parse_mini(broken_lines)
    repaired_tree = parse_mini(repaired_lines)
    actions = tree_edit_actions(broken_tree, repaired_tree)

    categories: set[str] = set()
    for action in actions:
        inside_kept_invocation = any(
            kind in (INVOCATION, ASSERTION) and old == new
            for kind, old, new in action.ancestors
        )
        inside_assertion = any(
            kind == ASSERTION for kind, _, _ in action.ancestors
        )
        node = action.node
        if action.op == "update":
            if node.kind in (INVOCATION, ASSERTION):
                categories.add("INV")
            if node.kind == ANNOTATION_ARG and (
                node.label.split("=")[0] in EXPECTED_EXCEPTION_ARGS
                or action.new_label.split("=")[0] in EXPECTED_EXCEPTION_ARGS
            ):
                categories.add("ORC")
            if inside_kept_invocation and node.kind in (ARGUMENT, LITERAL, IDENTIFIER):
                categories.add("ARG")
            if inside_assertion or node.kind == ASSERTION:
                categories.add("ORC")
        else:  # insert / delete
            if _subtree_has_invocation(node):
                categories.add("INV")
            if inside_kept_invocation and node.kind == ARGUMENT:
                categories.add("ARG")
            if inside_kept_invocation and node.kind in (LITERAL, IDENTIFIER):
                categories.add("ARG")
            if inside_assertion or _subtree_has_assertion(node):
                categories.add("ORC")

    broken_decls = _decl_types(broken_lines)
    repaired_decls = _decl_types(repaired_lines)
    for name, (decl_type, call) in broken_decls.items():
        after = repaired_decls.get(name)
        if after and after[1] == call and after[0] != decl_type:
            categories.add("ARG")

    changed_text = list(broken_lines) != list(repaired_lines)
    return RepairCategory(
        categories=frozenset(categories),
        other=changed_text and not categories,
        ast_edit_count=len(actions),
    )


# --------------------------------------------------------------------------
# Method-span indexing for Java-ish source files
# --------------------------------------------------------------------------


_CLASS_RE = re.compile(
    r"^\s*(?:(?:public|protected|private|static|final|abstract)\s+)*"
    r"(?:class|interface|enum)\s+([A-Za-z_$][\w$]*)"
)
_PACKAGE_RE = re.compile(r"^\s*package\s+([\w.]+)\s*;")
_METHOD_HEAD_RE = re.compile(
    r"^\s*(?:(?:public|protected|private|static|final|abstract|synchronized|"
    r"native|default|strictfp)\s+)*(?:<[^>]+>\s+)?"
    r"(?:[\w$<>\[\],.?\s]+?\s+)?([A-Za-z_$][\w$]*)\s*\(([^)]*)\)"
    r"\s*(?:throws\s+[\w.,\s]+)?\s*\{\s*$"
)
_CONTROL_KEYWORDS = {"if", "for", "while", "switch", "catch", "synchronized", "return", "new", "else", "do", "try"}


@dataclass(frozen=True)
class MethodSpan:
    fqn: str
    start: int  # 1-based, inclusive: the declaration line
    end: int  # 1-based, inclusive: the closing brace line
    annotations: tuple[str, ...] = ()


def _param_types(params: str) -> str:
    types = []
    for piece in _split_top_level(params, ","):
        piece = piece.strip()
        if not piece:
            continue
        piece = re.sub(r"^final\s+", "", piece)
        tokens = piece.split()
        if len(tokens) >= 2:
            types.append(tokens[-2].lstrip("@"))
        else:
            types.append(tokens[0])
    return ",".join(types)


def extract_method_index(lines: list[str]) -> list[MethodSpan]:
    """Best-effort method spans with fully qualified names.

    Tracks package, class nesting, and brace depth. Method bodies run from the
    declaration line to its matching closing brace. Anonymous classes and
    lambdas inside a method stay inside its span.
    """
    package = ""
    spans: list[MethodSpan] = []
    class_stack: list[tuple[str, int]] = []  # (name, depth at entry)
    pending_annotations: list[str] = []
    depth = 0
    method_open: tuple[str, int, int, tuple[str, ...]] | None = None  # fqn, start, depth, annotations

    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        pkg = _PACKAGE_RE.match(line)
        if pkg:
            package = pkg.group(1)
        cls = _CLASS_RE.match(line)
        opens = raw.count("{")
        closes = raw.count("}")
        if cls:
            class_stack.append((cls.group(1), depth))
            pending_annotations = []
        elif method_open is None and class_stack and line.startswith("@"):
            pending_annotations.append(line.split("(")[0].lstrip("@"))
        elif method_open is None and class_stack:
            head = _METHOD_HEAD_RE.match(raw)
            if head and head.group(1) not in _CONTROL_KEYWORDS:
                qualifier = ".".join(
                    ([package] if package else []) + [c[0] for c in class_stack]
                )
                fqn = f"{qualifier}.{head.group(1)}({_param_types(head.group(2))})"
                method_open = (fqn, line_no, depth, tuple(pending_annotations))
                pending_annotations = []
            elif line and not line.startswith("//"):
                pending_annotations = []
        depth += opens - closes
        if method_open is not None and depth <= method_open[2]:
            fqn, start, _, annotations = method_open
            spans.append(MethodSpan(fqn, start, line_no, annotations))
            method_open = None
        while class_stack and depth <= class_stack[-1][1] and closes:
            if depth <= class_stack[-1][1]:
                class_stack.pop()
            else:
                break
    return spans
