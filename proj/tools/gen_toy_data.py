#!/usr/bin/env python3
"""Regenerates the desk-scale language-model corpus and word vectors under data/toy.

The corpus is sampled from small per-domain phrase grammars (power tools,
cooking, finance, sports, travel, health) plus the suggestion corpus. The
vectors are a PPMI + truncated SVD factorization of windowed co-occurrence
counts over that corpus. Output is fully determined by --seed.
"""

import argparse
import collections
import pathlib
import random

import numpy as np

DOMAINS = {
    "tools": {
        "things": ["jigsaw", "circular saw", "router", "drill", "hammer drill", "sander",
                   "belt sander", "orbital sander", "bench grinder", "chainsaw", "lawn mower",
                   "table saw", "miter saw", "angle grinder", "sharpening stone", "whetstone",
                   "nail gun", "heat gun", "drill press", "planer", "oscillating multi tool",
                   "reciprocating saw", "stud finder", "hedge trimmer", "leaf blower"],
        "parts": ["blade", "drill bits", "bit", "chain", "belt", "guard", "motor", "battery",
                  "cutting height", "sandpaper", "bar", "chuck", "fence", "base plate"],
        "stuff": ["wood", "plywood", "concrete", "metal", "deck", "drywall", "laminate",
                  "tile", "brick", "pine", "oak", "knife", "chisel", "groove", "curve",
                  "straight line", "board", "bar oil", "oil", "safety glasses", "gloves"],
        "acts": ["cut", "sharpen", "sand", "drill", "change", "replace", "adjust", "measure",
                 "clean", "oil", "use", "repair", "grind", "smooth", "trim"],
    },
    "cooking": {
        "things": ["slow cooker", "rice cooker", "pressure cooker", "oven", "frying pan",
                   "blender", "mixer", "grill", "skillet", "kitchen knife", "cutting board"],
        "parts": ["lid", "bowl", "pot", "tray", "recipe", "sauce", "dough", "batter"],
        "stuff": ["chicken", "beef", "rice", "bread", "flour", "butter", "sugar", "onion",
                  "garlic", "pancakes", "cake", "soup", "olive oil", "baking soda", "eggs",
                  "pasta", "salt", "mango", "stew", "vegetables"],
        "acts": ["cook", "bake", "fry", "boil", "chop", "mix", "stir", "season", "roast",
                 "grill", "slice", "measure", "cut", "use"],
    },
    "finance": {
        "things": ["credit card", "bank account", "index fund", "mortgage", "loan", "budget",
                   "savings account", "retirement plan", "stock", "bond", "portfolio"],
        "parts": ["interest rate", "credit score", "balance", "fee", "payment", "dividend",
                  "tax", "return"],
        "stuff": ["money", "credit", "debt", "income", "the stock market", "a house",
                  "a car", "cash", "savings", "retirement", "inflation", "shares"],
        "acts": ["invest", "save", "borrow", "pay", "build", "open", "close", "buy", "sell",
                 "transfer", "use", "manage"],
    },
    "sports": {
        "things": ["tennis racket", "soccer ball", "basketball", "bicycle", "running shoes",
                   "golf club", "swimming pool", "treadmill", "marathon", "team"],
        "parts": ["serve", "swing", "pace", "grip", "stroke", "score", "coach", "match"],
        "stuff": ["a race", "the game", "the court", "the field", "speed", "stamina",
                  "strength", "a tournament", "the season", "practice"],
        "acts": ["train", "play", "run", "win", "improve", "practice", "throw", "kick",
                 "swim", "serve", "coach", "use"],
    },
    "travel": {
        "things": ["passport", "visa", "flight", "hotel", "train ticket", "suitcase",
                   "travel insurance", "rental car", "cruise", "airport"],
        "parts": ["gate", "seat", "luggage", "booking", "itinerary", "reservation"],
        "stuff": ["canada", "japan", "new york", "australia", "europe", "paris", "the beach",
                  "the city", "the mountains", "a museum", "the border"],
        "acts": ["visit", "travel", "book", "pack", "fly", "drive", "cancel", "renew",
                 "explore", "use"],
    },
    "health": {
        "things": ["blood pressure", "heart rate", "immune system", "diet", "vitamin",
                   "medicine", "doctor", "vaccine", "hospital", "sleep schedule"],
        "parts": ["symptom", "dose", "treatment", "test", "checkup", "infection"],
        "stuff": ["stress", "weight", "sleep", "exercise", "water", "sugar", "the flu",
                  "a cold", "children", "the body", "headaches", "pain"],
        "acts": ["lower", "reduce", "treat", "prevent", "measure", "improve", "check",
                 "manage", "avoid", "use"],
    },
}

FRAMES = [
    "how to {act} a {thing}",
    "how to {act} {stuff} with a {thing}",
    "how to {act} the {part} on a {thing}",
    "how to {act} {thing} {part}",
    "what is a {thing} used for",
    "what is the best {thing} for {stuff}",
    "what type of {thing} to use on {stuff}",
    "can i use a {thing} on {stuff}",
    "can i {act} {stuff} without a {thing}",
    "do i need a {thing} to {act} {stuff}",
    "does a {thing} need {stuff}",
    "how does a {thing} work",
    "why does my {thing} {act} so slowly",
    "the {thing} is used to {act} {stuff}",
    "you can {act} {stuff} with a {thing}",
    "a good {thing} makes it easy to {act} {stuff}",
    "always check the {part} before you {act} {stuff}",
    "the {part} of the {thing} needs to be checked often",
    "it is easy to {act} {stuff} if you have the right {thing}",
    "we used a {thing} to {act} the {stuff}",
    "she wanted to {act} {stuff} but the {thing} was broken",
    "he bought a new {thing} last week",
    "this {thing} has a very good {part}",
    "most people {act} {stuff} at least once a year",
    "there are many ways to {act} {stuff}",
]


def article_fix(s):
    out = []
    toks = s.split()
    for i, t in enumerate(toks):
        if t == "a" and i + 1 < len(toks) and toks[i + 1][0] in "aeiou":
            t = "an"
        out.append(t)
    return " ".join(out)


def sample_sentence(rng, domain):
    d = DOMAINS[domain]
    frame = rng.choice(FRAMES)
    s = frame.format(act=rng.choice(d["acts"]), thing=rng.choice(d["things"]),
                     part=rng.choice(d["parts"]), stuff=rng.choice(d["stuff"]))
    return article_fix(s)


def build_corpus(rng, n_sentences, suggestions):
    lines = [sample_sentence(rng, rng.choice(sorted(DOMAINS))) for _ in range(n_sentences)]
    lines.extend(suggestions)
    rng.shuffle(lines)
    return lines


def train_vectors(lines, dim, window, min_count):
    counts = collections.Counter(t for line in lines for t in line.split())
    vocab = sorted(w for w, c in counts.items() if c >= min_count)
    index = {w: i for i, w in enumerate(vocab)}
    co = np.zeros((len(vocab), len(vocab)))
    for line in lines:
        toks = [index[t] for t in line.split() if t in index]
        for i, a in enumerate(toks):
            for j in range(max(0, i - window), min(len(toks), i + window + 1)):
                if i != j:
                    co[a, toks[j]] += 1.0 / abs(i - j)
    total = co.sum()
    row = co.sum(axis=1, keepdims=True)
    col = co.sum(axis=0, keepdims=True) ** 0.75
    col = col / col.sum() * total
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(co * total / (row * col))
    ppmi = np.nan_to_num(np.maximum(pmi, 0.0), posinf=0.0)
    u, s, _ = np.linalg.svd(ppmi, full_matrices=False)
    vecs = u[:, :dim] * np.sqrt(s[:dim])
    # SVD sign is arbitrary; pin it so reruns give identical files.
    signs = np.sign(vecs[np.abs(vecs).argmax(axis=0), range(dim)])
    return vocab, vecs * signs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).parent.parent / "data" / "toy")
    ap.add_argument("--seed", type=int, default=20170403)
    ap.add_argument("--sentences", type=int, default=30000)
    ap.add_argument("--dim", type=int, default=50)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    suggestions = [l.strip() for l in (args.out / "suggestions.txt").read_text().splitlines() if l.strip()]
    lines = build_corpus(rng, args.sentences, suggestions)
    (args.out / "lm_corpus.txt").write_text("\n".join(lines) + "\n")

    vocab, vecs = train_vectors(lines, args.dim, window=4, min_count=1)
    with open(args.out / "embeddings.txt", "w") as f:
        f.write(f"{len(vocab)} {args.dim}\n")
        for w, v in zip(vocab, vecs):
            f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")
    print(f"{len(lines)} sentences, {sum(len(l.split()) for l in lines)} tokens, {len(vocab)} vectors")


if __name__ == "__main__":
    main()
