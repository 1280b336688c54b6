#!/usr/bin/env python3
"""Independent reference implementation of the evaluation metrics.

Writes tests/data/metrics_golden.json. Inputs are lowercase, whitespace
separated and punctuation free so tokenization cannot differ between the two
implementations. METEOR alignment is brute force over every maximal matching.
"""

import json
import math
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path

EPS = 1e-9


def grams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def clipped(h, r, n):
    hc, rc = grams(h, n), grams(r, n)
    return sum(min(c, rc[g]) for g, c in hc.items())


def bleu1(h, r, max_n):
    logs = []
    for n in range(1, max_n + 1):
        total = max(len(h) - n + 1, 0)
        m = clipped(h, r, n)
        logs.append(math.log(m / total) if m else math.log(EPS))
    bp = 1.0 if len(h) > len(r) else math.exp(1 - len(r) / len(h))
    return bp * math.exp(sum(logs) / max_n)


def rouge2(h, r):
    if len(h) < 2 or len(r) < 2:
        return 0.0
    m = clipped(h, r, 2)
    if m == 0:
        return 0.0
    p = Fraction(m, len(h) - 1)
    rc = Fraction(m, len(r) - 1)
    return float(2 * p * rc / (p + rc))


def alignments(h, r):
    """Every injective map hyp position -> ref position with equal words."""
    out = []

    def rec(i, used, pairs):
        if i == len(h):
            out.append(list(pairs))
            return
        rec(i + 1, used, pairs)
        for j, w in enumerate(r):
            if w == h[i] and j not in used:
                used.add(j)
                pairs.append((i, j))
                rec(i + 1, used, pairs)
                pairs.pop()
                used.discard(j)

    rec(0, set(), [])
    return out


def chunks(pairs):
    c = 0
    prev = None
    for i, j in pairs:
        if prev is None or not (i == prev[0] + 1 and j == prev[1] + 1):
            c += 1
        prev = (i, j)
    return c


def meteor1(h, r):
    cands = alignments(h, r)
    m = max(len(a) for a in cands)
    if m == 0:
        return 0.0
    ch = min(chunks(a) for a in cands if len(a) == m)
    p = Fraction(m, len(h))
    rc = Fraction(m, len(r))
    fmean = 10 * p * rc / (rc + 9 * p)
    penalty = Fraction(1, 2) * Fraction(ch, m) ** 3
    return float(fmean * (1 - penalty))


def distinct(hyps, n):
    seen, total = set(), 0
    for h in hyps:
        for i in range(len(h) - n + 1):
            seen.add(tuple(h[i:i + n]))
            total += 1
    return float(Fraction(len(seen), total)) if total else 0.0


def avg(vals):
    return math.fsum(vals) / len(vals)


CASES = [
    ("bleu", 2, "a b c", ["a b d"]),
    ("bleu", 2, "the cat sat on the mat", ["the cat is on the mat"]),
    ("bleu", 2, "i am so happy for you", ["i am happy for you", "so happy for you"]),
    ("bleu", 2, "good luck", ["good luck with the interview tomorrow"]),
    ("bleu", 2, "hang in there", ["sorry for your loss"]),
    ("bleu", 4, "congrats you earned it", ["congrats you earned it"]),
    ("bleu", 4, "that is so sad to hear", ["that is sad to hear", "so sorry to hear that"]),
    ("bleu", 4, "what happened next", ["what happened after that"]),
    ("rouge2", 0, "a b c", ["a b d"]),
    ("rouge2", 0, "i am so sorry to hear that", ["so sorry to hear that", "i am sorry"]),
    ("rouge2", 0, "the the the the", ["the the"]),
    ("rouge2", 0, "ok", ["ok then"]),
    ("meteor", 0, "a b c", ["a b c"]),
    ("meteor", 0, "wow", ["wow"]),
    ("meteor", 0, "the cat sat on the mat", ["on the mat the cat sat"]),
    ("meteor", 0, "a b a b a", ["b a b a b a"]),
    ("meteor", 0, "you will do great do not worry", ["do not worry you will do great", "great job"]),
    ("distinct", 1, None, ["a b", "a b"]),
    ("distinct", 2, None, ["a a a"]),
    ("distinct", 3, None, ["i am so happy", "i am so sorry", "so happy for you"]),
]


def score(metric, n, hyp, refs):
    if metric == "distinct":
        return distinct([r.split() for r in refs], n)
    h = hyp.split()
    rs = [r.split() for r in refs]
    if metric == "bleu":
        return avg([bleu1(h, r, n) for r in rs])
    if metric == "rouge2":
        return avg([rouge2(h, r) for r in rs])
    return avg([meteor1(h, r) for r in rs])


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "metrics_golden.json"
    rows = []
    for k, (metric, n, hyp, refs) in enumerate(CASES):
        row = {"case": k + 1, "metric": metric, "n": n, "value": score(metric, n, hyp, refs)}
        if metric == "distinct":
            row["hypotheses"] = refs
        else:
            row["hypothesis"] = hyp
            row["references"] = refs
        rows.append(row)
    out.write_text(json.dumps(rows, indent=1) + "\n")


if __name__ == "__main__":
    main()
