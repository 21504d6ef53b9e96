"""Synthetic English datasets and seed pairs in the mock's pseudo-language."""

import random

from llmt.client import pseudo_translate
from llmt.data import Dataset, Example, SeedPair
from llmt.lf import NodeKind, ParseTree, intent, slot

VALUES = ["5 am", "tomorrow", "today", "mom", "the office", "jazz", "rain", "7 pm",
          "paris", "my sister", "new song", "weather", "next week", "john", "pizza"]
VERBS = ["please", "can you", "i want to", "show me", "set", "play", "send"]


def make_domain(rng, domain, n_examples, n_intents, n_slots, start=0):
    """Examples whose utterances contain every slot value verbatim."""
    intents = [f"{domain.upper()}_INTENT_{i}" for i in range(n_intents)]
    slots = [f"{domain.upper()}_SLOT_{i}" for i in range(n_slots)]
    out = []
    for i in range(n_examples):
        label = intents[i % n_intents]
        chosen = rng.sample(slots, rng.randint(0, 3))
        words = [rng.choice(VERBS), label.lower().replace("_", " ")]
        nodes = []
        for s in chosen:
            value = rng.choice(VALUES)
            words += ["with", value]
            nodes.append(slot(s, value))
        out.append(Example(f"{domain}-{start + i:04d}", "en", domain, " ".join(words),
                           intent(label, *nodes)))
    return out


def synthetic_dataset(seed=0, domains=("alarm", "music", "weather"), per_domain=60,
                      n_intents=10, n_slots=12):
    rng = random.Random(seed)
    examples = []
    for d in domains:
        examples += make_domain(rng, d, per_domain, n_intents, n_slots)
    return Dataset(examples)


def _translate_tree(tree: ParseTree) -> ParseTree:
    if tree.kind is NodeKind.SLOT and tree.value is not None:
        return slot(tree.label, pseudo_translate(tree.value))
    return ParseTree(tree.kind, tree.label, tuple(_translate_tree(c) for c in tree.children))


def seed_pairs_for(examples, language="hi"):
    return [
        SeedPair(ex, Example(ex.id, language, ex.domain, pseudo_translate(ex.utterance),
                             _translate_tree(ex.logical_form), ex.split))
        for ex in examples
    ]
