"""TOP-style bracketed logical forms.

A logical form looks like::

    [IN:GET_WEATHER [SL:ATTRIBUTE rainfall ] [SL:DATE today ] ]

Intent nodes hold slots; slot nodes hold either a surface value or nested
intents. Slots with neither are allowed so that signatures (value-erased
forms) parse back into trees.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterator, Optional

_BRACKETS = "[]"


class NodeKind(str, enum.Enum):
    INTENT = "IN"
    SLOT = "SL"


class LogicalFormError(ValueError):
    """Base class for parse errors. ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EmptyInput(LogicalFormError):
    pass


class UnbalancedBrackets(LogicalFormError):
    pass


class UnknownNodePrefix(LogicalFormError):
    pass


class SlotWithBothValueAndChild(LogicalFormError):
    pass


class UnexpectedToken(LogicalFormError):
    """Structurally misplaced token, e.g. bare words directly inside an intent."""


def _check_label(label: str) -> None:
    if not label or any(c.isspace() or c in _BRACKETS for c in label):
        raise ValueError(f"invalid label {label!r}")


@dataclass(frozen=True)
class ParseTree:
    kind: NodeKind
    label: str
    children: tuple[ParseTree, ...] = ()
    value: Optional[str] = None

    def __post_init__(self):
        _check_label(self.label)
        if self.kind is NodeKind.INTENT:
            if self.value is not None:
                raise ValueError("intent nodes carry no value")
            if any(c.kind is not NodeKind.SLOT for c in self.children):
                raise ValueError(f"intent {self.label} may only contain slots")
        else:
            if any(c.kind is not NodeKind.INTENT for c in self.children):
                raise ValueError(f"slot {self.label} may only contain intents")
            if self.value is not None:
                if self.children:
                    raise ValueError(f"slot {self.label} has both a value and children")
                if not self.value or self.value != " ".join(self.value.split()):
                    raise ValueError(f"slot value {self.value!r} is not space-normalized")
                if any(c in _BRACKETS for c in self.value):
                    raise ValueError("slot values may not contain brackets")

    @property
    def is_intent(self) -> bool:
        return self.kind is NodeKind.INTENT

    def __str__(self) -> str:
        return serialize(self)

    def walk(self) -> Iterator[ParseTree]:
        """Depth-first, left-to-right over every node."""
        yield self
        for child in self.children:
            yield from child.walk()


def intent(label: str, *slots: ParseTree) -> ParseTree:
    return ParseTree(NodeKind.INTENT, label, tuple(slots))


def slot(label: str, value: Optional[str] = None, *intents: ParseTree) -> ParseTree:
    return ParseTree(NodeKind.SLOT, label, tuple(intents), value)


@dataclass(frozen=True)
class Signature:
    """A logical form with every slot value removed."""

    text: str

    def __str__(self) -> str:
        return self.text

    @property
    def tree(self) -> ParseTree:
        return parse_logical_form(self.text)


# -- parsing ---------------------------------------------------------------

def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    """Yield (kind, token, char_offset); kind is 'open', 'close' or 'word'."""
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "]":
            yield "close", c, i
            i += 1
        else:
            j = i + 1
            while j < n and not text[j].isspace() and text[j] not in _BRACKETS:
                j += 1
            yield ("open" if c == "[" else "word"), text[i:j], i
            i = j


def parse_logical_form(text: str) -> ParseTree:
    """Parse a bracketed logical form.

    Whitespace inside slot values is collapsed to single spaces. Raises a
    :class:`LogicalFormError` subclass carrying the byte offset of the fault.
    """

    def byte_offset(i: int) -> int:
        return len(text[:i].encode("utf-8"))

    if not text.strip():
        raise EmptyInput("empty logical form", 0)

    # each frame: [kind, label, children, value_words, open_offset]
    stack: list[list] = []
    root: Optional[ParseTree] = None
    for kind, tok, pos in _tokenize(text):
        if root is not None:
            if kind == "close":
                raise UnbalancedBrackets("unmatched ']'", byte_offset(pos))
            raise UnexpectedToken(f"trailing input {tok!r}", byte_offset(pos))
        if kind == "open":
            prefix, _, label = tok[1:].partition(":")
            if prefix not in ("IN", "SL") or not _:
                raise UnknownNodePrefix(f"unknown node {tok!r}", byte_offset(pos))
            if not label:
                raise UnexpectedToken(f"missing label in {tok!r}", byte_offset(pos))
            node_kind = NodeKind(prefix)
            if not stack:
                if node_kind is not NodeKind.INTENT:
                    raise UnexpectedToken("root must be an intent", byte_offset(pos))
            else:
                parent = stack[-1]
                if parent[0] is node_kind:
                    raise UnexpectedToken(
                        f"{tok} cannot nest directly inside {parent[0].value}:{parent[1]}",
                        byte_offset(pos),
                    )
                if parent[3]:
                    raise SlotWithBothValueAndChild(
                        f"slot {parent[1]} has both a value and a nested intent",
                        byte_offset(pos),
                    )
            stack.append([node_kind, label, [], [], pos])
        elif kind == "word":
            if not stack:
                raise UnexpectedToken(f"text {tok!r} outside any node", byte_offset(pos))
            frame = stack[-1]
            if frame[0] is NodeKind.INTENT:
                raise UnexpectedToken(
                    f"bare text {tok!r} inside intent {frame[1]}", byte_offset(pos)
                )
            if frame[2]:
                raise SlotWithBothValueAndChild(
                    f"slot {frame[1]} has both a nested intent and a value",
                    byte_offset(pos),
                )
            frame[3].append(tok)
        else:
            if not stack:
                raise UnbalancedBrackets("unmatched ']'", byte_offset(pos))
            node_kind, label, children, words, _ = stack.pop()
            node = ParseTree(
                node_kind, label, tuple(children), " ".join(words) if words else None
            )
            if stack:
                stack[-1][2].append(node)
            else:
                root = node
    if stack:
        raise UnbalancedBrackets(
            f"{len(stack)} unclosed node(s), innermost {stack[-1][0].value}:{stack[-1][1]}",
            byte_offset(stack[-1][4]),
        )
    assert root is not None
    return root


def serialize(tree: ParseTree) -> str:
    parts = [f"[{tree.kind.value}:{tree.label}"]
    if tree.value is not None:
        parts.append(tree.value)
    parts.extend(serialize(c) for c in tree.children)
    parts.append("]")
    return " ".join(parts)


# -- derived views ---------------------------------------------------------

def erase_values(tree: ParseTree) -> ParseTree:
    return replace(tree, value=None, children=tuple(erase_values(c) for c in tree.children))


def signature(tree: ParseTree) -> Signature:
    return Signature(serialize(erase_values(tree)))


def canonicalize(tree: ParseTree) -> ParseTree:
    """Sort every intent's slots by (label, serialized canonical slot)."""
    children = tuple(canonicalize(c) for c in tree.children)
    if tree.is_intent:
        children = tuple(sorted(children, key=lambda c: (c.label, serialize(c))))
    return replace(tree, children=children)


def canonical_signature(tree: ParseTree) -> Signature:
    """Order-insensitive signature: erase values first, then sort."""
    return Signature(serialize(canonicalize(erase_values(tree))))


def slot_values(tree: ParseTree) -> list[tuple[str, str]]:
    return [
        (node.label, node.value)
        for node in tree.walk()
        if node.kind is NodeKind.SLOT and node.value is not None
    ]


def replace_slot_value(tree: ParseTree, index: int, value: str) -> ParseTree:
    """Copy of ``tree`` with the ``index``-th entry of :func:`slot_values` changed."""
    counter = [index]

    def rebuild(node: ParseTree) -> ParseTree:
        if node.kind is NodeKind.SLOT and node.value is not None:
            counter[0] -= 1
            return replace(node, value=value) if counter[0] == -1 else node
        return replace(node, children=tuple(rebuild(c) for c in node.children))

    out = rebuild(tree)
    if counter[0] >= 0:
        raise IndexError(f"tree has no value-bearing slot #{index}")
    return out


def labels(tree: ParseTree) -> set[str]:
    """Every intent and slot label at any depth, prefixed ``IN:`` / ``SL:``."""
    return {f"{node.kind.value}:{node.label}" for node in tree.walk()}


def slot_label_counts(tree: ParseTree, value_bearing_only: bool = True) -> Counter:
    return Counter(
        node.label
        for node in tree.walk()
        if node.kind is NodeKind.SLOT and (node.value is not None or not value_bearing_only)
    )


def corrected_em(pred: ParseTree, gold: ParseTree) -> bool:
    """Exact match that ignores the order of sibling slots."""
    return serialize(canonicalize(pred)) == serialize(canonicalize(gold))


def exact_match(pred: ParseTree, gold: ParseTree) -> bool:
    """Plain string exact match (order sensitive)."""
    return serialize(pred) == serialize(gold)


def pretty(tree: ParseTree, indent: int = 0) -> str:
    pad = "  " * indent
    head = f"{pad}{tree.kind.value}:{tree.label}"
    if tree.value is not None:
        head += f" = {tree.value!r}"
    return "\n".join([head] + [pretty(c, indent + 1) for c in tree.children])
