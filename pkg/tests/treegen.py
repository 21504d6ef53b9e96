"""Random logical forms and the independent transforms used as test oracles."""

import random

from hypothesis import strategies as st

from llmt.lf import NodeKind, ParseTree, intent, slot

INTENTS = ["GET_WEATHER", "CREATE_ALARM", "PLAY_MUSIC", "SEND_MESSAGE", "GET_EVENT", "A", "C"]
SLOTS = ["DATE_TIME", "ATTRIBUTE", "LOCATION", "CONTACT", "MUSIC_TYPE", "B", "D"]
WORDS = ["5", "am", "pm", "today", "rain", "mom", "jazz", "the", "office", "नमस्ते",
         "ça", "va", "O'Neil", "x-ray", "50%", "#1", "é"]


def random_tree(rng: random.Random, depth: int = 0, max_depth: int = 3) -> ParseTree:
    slots = []
    for _ in range(rng.randint(0, 4 if depth == 0 else 2)):
        label = rng.choice(SLOTS)
        if depth < max_depth and rng.random() < 0.2:
            slots.append(slot(label, None, random_tree(rng, depth + 1, max_depth)))
        else:
            slots.append(slot(label, " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 3)))))
    return intent(rng.choice(INTENTS), *slots)


def random_valued_tree(rng: random.Random) -> ParseTree:
    """A random tree holding at least one slot value."""
    while True:
        t = random_tree(rng)
        if any(n.value is not None for n in t.walk()):
            return t


def shuffle_slots(tree: ParseTree, rng: random.Random) -> ParseTree:
    children = [shuffle_slots(c, rng) for c in tree.children]
    if tree.kind is NodeKind.INTENT:
        rng.shuffle(children)
    return ParseTree(tree.kind, tree.label, tuple(children), tree.value)


def mutate_one_value(tree: ParseTree, rng: random.Random) -> ParseTree:
    """Change exactly one slot value to a string it cannot equal."""
    count = sum(1 for n in tree.walk() if n.value is not None)
    target = rng.randrange(count)
    seen = [0]

    def go(node):
        if node.value is not None:
            hit = seen[0] == target
            seen[0] += 1
            return ParseTree(node.kind, node.label, (), node.value + " MUTATED" if hit else node.value)
        return ParseTree(node.kind, node.label, tuple(go(c) for c in node.children), None)

    return go(tree)


_label = st.sampled_from(INTENTS + SLOTS)
_value = st.lists(st.sampled_from(WORDS), min_size=1, max_size=3).map(" ".join)


def _slot_of(intents):
    return st.one_of(
        st.builds(lambda l, v: slot(l, v), _label, _value),
        st.builds(lambda l, i: slot(l, None, i), _label, intents),
    )


# intent -> slots -> (value | intent -> ...)
trees = st.recursive(
    st.builds(lambda l, vs: intent(l, *[slot(s, v) for s, v in vs]),
              _label, st.lists(st.tuples(_label, _value), max_size=3)),
    lambda inner: st.builds(lambda l, s: intent(l, *s), _label, st.lists(_slot_of(inner), max_size=3)),
    max_leaves=12,
)
