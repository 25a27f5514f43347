#!/usr/bin/env python3
"""Writes the golden prepared artifacts for fixtures/config.json.

This is a from-scratch reimplementation of the prepare step (tokenizer,
vocabulary ordering, knowledge verbalization and example layout), kept
independent of the Rust code so the two can be compared byte for byte.

Usage: golden_examples.py [CONFIG] [OUT_DIR]
"""

import json
import sys
from collections import Counter
from pathlib import Path

RESERVED = ["<pad>", "<bos>", "<eos>", "<unk>", "<cls>", "<sep>"]
EOS, UNK, CLS, SEP = 2, 3, 4, 5
RELATIONS = [
    "oEffect", "oReact", "oWant", "xAttr", "xEffect",
    "xIntent", "xNeed", "xReact", "xReason", "xWant",
]
TEMPLATES = {
    "oEffect": "As a result, others {}.",
    "oReact": "As a result, others feel {}.",
    "oWant": "As a result, others want {}.",
    "xAttr": "PersonX is seen as {}.",
    "xEffect": "As a result, PersonX {}.",
    "xIntent": "Because PersonX wanted {}.",
    "xNeed": "Before, PersonX needed {}.",
    "xReact": "As a result, PersonX feels {}.",
    "xReason": "Because {}.",
    "xWant": "As a result, PersonX wants {}.",
}


def words(text):
    out, cur = [], ""
    for ch in text:
        if ch.isspace():
            if cur:
                out.append(cur)
            cur = ""
        elif ch.isalnum():
            cur += ch.lower()
        else:
            if cur:
                out.append(cur)
            cur = ""
            out.append(ch.lower())
    if cur:
        out.append(cur)
    return out


def verbalize(relation, entailment):
    s = TEMPLATES[relation].replace("{}", entailment.strip(), 1)
    return s if s.endswith(".") else s + "."


def sources(dialogue, turn, scope):
    utts = dialogue["utterances"]
    if scope == "all_preceding":
        return list(range(turn))
    seekers = [j for j in range(turn) if utts[j]["role"] == "seeker"]
    return seekers[-1:]


def knowledge(dialogue, cache, relations, scope):
    """Sentences per utterance index, only for utterances feeding a helper turn."""
    needed = set()
    for i, u in enumerate(dialogue["utterances"]):
        if u["role"] == "helper":
            needed.update(sources(dialogue, i, scope))
    chosen = [r for r in RELATIONS if r in relations]
    out = {}
    for j in sorted(needed):
        tuples = {t["relation"]: t["entailment"] for t in cache[dialogue["utterances"][j]["text"]]}
        out[j] = [verbalize(r, tuples[r]) for r in chosen if r in tuples]
    return out


def dump(value):
    return json.dumps(value, ensure_ascii=False, separators=(",", ":")) + "\n"


def main():
    root = Path(__file__).resolve().parent.parent
    config_path = Path(sys.argv[1]) if len(sys.argv) > 1 else root / "fixtures" / "config.json"
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else root / "fixtures" / "golden"
    cfg = json.loads(config_path.read_text())
    base = config_path.parent
    strategies = cfg["strategies"]
    cs = cfg["commonsense"]
    scope = cs.get("scope", "latest_seeker")
    relations = cs.get("relations", RELATIONS)
    cache = {}
    for line in (base / cs["cache"]).read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            cache[rec["text"]] = rec["tuples"]

    splits = {}
    for name in ("train", "dev", "test"):
        lines = (base / cfg["data"][name]).read_text().splitlines()
        splits[name] = [json.loads(l) for l in lines if l.strip()]
    know = {n: [knowledge(d, cache, relations, scope) for d in ds] for n, ds in splits.items()}

    counts = Counter()
    for d, k in zip(splits["train"], know["train"]):
        for text in [d["situation"]] + [u["text"] for u in d["utterances"]]:
            counts.update(words(text))
        for sentences in k.values():
            for s in sentences:
                counts.update(words(s))
    reserved = RESERVED + [f"[{s}]" for s in strategies]
    kept = [w for w, c in counts.items() if c >= cfg.get("min_count", 1) and w not in reserved]
    kept.sort(key=lambda w: (-counts[w], w))
    tokens = reserved + kept
    ids = {t: i for i, t in enumerate(tokens)}

    def tok(text):
        return [ids.get(w, UNK) for w in words(text)]

    out.mkdir(parents=True, exist_ok=True)
    (out / "vocab.json").write_text(dump({"strategies": strategies, "tokens": tokens}))
    for name, dialogues in splits.items():
        rows = []
        for d, k in zip(dialogues, know[name]):
            history = [CLS] + tok(d["situation"])
            for i, u in enumerate(d["utterances"]):
                if u["role"] == "helper":
                    extra = [s for j in sources(d, i, scope) for s in k.get(j, [])]
                    inp = history + ([SEP] + [t for s in extra for t in tok(s)] if extra else [])
                    marker = ids[f"[{u['strategy']}]"]
                    rows.append(dump({
                        "dialogue_id": d["id"],
                        "turn_index": i,
                        "gold_strategy": u["strategy"],
                        "input": inp,
                        "target": [marker] + tok(u["text"]) + [EOS],
                    }))
                history += [SEP] + tok(u["text"])
        (out / f"examples_{name}.jsonl").write_text("".join(rows))


if __name__ == "__main__":
    main()
