#!/usr/bin/env python3
"""Generate the label-function round-trip corpus under tests/data/lf_corpus.

Each case NN.lf is a noisy but valid source text (free spacing, comments,
blank lines, escapes, decomposed Unicode, padded arguments). NN.canonical is
the expected canonical print computed here: arguments NFC-normalized and
stripped, printed with the fixed header/indent/quoting rules.

Usage: tools/gen_lf_corpus.py [--out DIR] [--count N] [--seed S]
"""

import argparse
import pathlib
import random
import unicodedata

API = {
    "validate_click_action": ["text"],
    "validate_click_or_hover_action": [("enum", ["click", "hover"]), "text", "text"],
    "validate_type_action": ["text", "text"],
    "validate_stop_action": ["text"],
    "validate_item_in_wishlist": ["text"],
    "validate_scroll_action": [("enum", ["up", "down", "left", "right"])],
    "validate_open_app": ["text"],
    "validate_navigate": ["text"],
}

WORDS = [
    "Add to Wish List", "Pro Expense", "Clock", "Search apps, web and more", "4200 calories",
    "Rental Income", "Navy Blue", "50x70", "Caf\u00e9", "Cafe\u0301", "\u1100\u1161\u11a8",
    "na\u00efve", "nai\u0308ve", "\u65e5\u672c\u8a9e", "http://shop.local/wishlist", "Say \"hi\"",
    "back\\slash", "line\nbreak", "It's", "A", "BUTTON", "Settings", "\u00c5ngstr\u00f6m",
    "A\u030angstro\u0308m", "$12.50", "x", "Wi-Fi", "\U0001F600 smile",
]

PAD = ["", "", "", " ", "  ", "\t", " \t"]


def escape(s):
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def canonical_arg(s):
    return unicodedata.normalize("NFC", s).strip()


def gen_arg(rng, spec):
    if isinstance(spec, tuple):
        value = rng.choice(spec[1])
        return value, (value if rng.random() < 0.5 else '"' + value + '"')
    value = rng.choice(PAD) + rng.choice(WORDS) + rng.choice(PAD)
    if rng.random() < 0.2:
        value += "\n"
    return value, '"' + escape(value) + '"'


def sp(rng):
    return rng.choice(["", "", " ", "  ", "\t"])


def gen_case(rng):
    guards = []
    for _ in range(rng.randint(1, 4)):
        api = rng.choice(sorted(API))
        args = [gen_arg(rng, spec) for spec in API[api]]
        guards.append((api, args))

    lines = []
    if rng.random() < 0.3:
        lines.append("# generated case")
    lines.append("fn verify(trajectory):")
    for api, args in guards:
        if rng.random() < 0.25:
            lines.append("")
        if rng.random() < 0.2:
            lines.append("  # key step")
        sep = [sp(rng) + "," + sp(rng) for _ in args]
        body = "".join((sep[i - 1] if i else "") + src for i, (_, src) in enumerate(args))
        lines.append("  require " + api + sp(rng) + "(" + sp(rng) + body + sp(rng) + ")" + sp(rng))
    source = "\n".join(lines) + ("\n" if rng.random() < 0.8 else "")

    out = ["fn verify(trajectory):"]
    for api, args in guards:
        out.append("  require " + api + "(" + ",".join('"' + escape(canonical_arg(v)) + '"' for v, _ in args) + ")")
    return source, "\n".join(out) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    root = pathlib.Path(__file__).resolve().parent.parent
    ap.add_argument("--out", type=pathlib.Path, default=root / "tests" / "data" / "lf_corpus")
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args()
    rng = random.Random(a.seed)
    a.out.mkdir(parents=True, exist_ok=True)
    for i in range(a.count):
        source, canonical = gen_case(rng)
        (a.out / f"{i:02d}.lf").write_bytes(source.encode("utf-8"))
        (a.out / f"{i:02d}.canonical").write_bytes(canonical.encode("utf-8"))


if __name__ == "__main__":
    main()
