#!/usr/bin/env python3
"""Writes the synthetic four-strategy dialogue corpus used by the tests.

Every helper turn either opens with its strategy's keyword (a fixed phrase)
or uses a generic phrase shared by all strategies that only differs in its
closing words. Generic phrases are more frequent, so an unsteered language
model rarely produces the keyword.

Usage: make_fixture.py [OUT_DIR]   (default: fixtures/corpus next to this script)
"""

import json
import random
import sys
from pathlib import Path

SEED = 20240617
DIALOGUES = 200
SPLITS = (("train", 160), ("dev", 20), ("test", 20))
KEYWORD_RATE = 0.35
CUE_RATE = 0.8

STRATEGIES = ["Question", "Reflection of feelings", "Self-disclosure", "Providing Suggestions"]
KEYWORDS = {
    "Question": "could",
    "Reflection of feelings": "sounds",
    "Self-disclosure": "personally",
    "Providing Suggestions": "maybe",
}
KEYWORD_PHRASES = {
    "Question": "could you tell me more about your {topic} ?",
    "Reflection of feelings": "sounds like your {topic} has been hard on you .",
    "Self-disclosure": "personally i went through the same with my {topic} .",
    "Providing Suggestions": "maybe try talking to someone about your {topic} .",
}
CLOSERS = {
    "Question": "right ?",
    "Reflection of feelings": "indeed .",
    "Self-disclosure": "too .",
    "Providing Suggestions": "though .",
}
CUES = {
    "Question": "i do not know where to start",
    "Reflection of feelings": "it is all too much",
    "Self-disclosure": "has anyone felt this way",
    "Providing Suggestions": "what should i do",
}
TOPICS = ["job", "exam", "friend", "partner", "family", "money", "health", "move"]
FEELINGS = ["sad", "anxious", "lonely", "angry", "stressed", "tired", "hurt", "lost"]
VERBS = ["are", "seem", "must be", "look"]
ADJECTIVES = ["overwhelmed", "worried", "exhausted", "upset", "frustrated", "drained"]
SEEKER_OPENERS = [
    "my {topic} makes me {feeling}",
    "i feel {feeling} because of my {topic}",
    "lately my {topic} has me {feeling}",
]
SITUATIONS = [
    "i am {feeling} about my {topic} .",
    "my {topic} keeps me {feeling} .",
]
TUPLE_TEMPLATES = {
    "oEffect": "try to comfort them",
    "oReact": "concerned",
    "oWant": "to help",
    "xAttr": "{feeling}",
    "xEffect": "asks for support",
    "xIntent": "to be understood",
    "xNeed": "to share the {topic} problem",
    "xReact": "{feeling}",
    "xReason": "the {topic} went badly",
    "xWant": "to feel better",
}


def helper_text(rng, strategy, topic):
    if rng.random() < KEYWORD_RATE:
        return KEYWORD_PHRASES[strategy].format(topic=topic)
    return "you {} {} {}".format(rng.choice(VERBS), rng.choice(ADJECTIVES), CLOSERS[strategy])


def seeker_text(rng, next_strategy, topic, feeling):
    cue_for = next_strategy if rng.random() < CUE_RATE else rng.choice(STRATEGIES)
    opener = rng.choice(SEEKER_OPENERS).format(topic=topic, feeling=feeling)
    return f"{opener} . {CUES[cue_for]} ."


def dialogue(rng, index):
    topic = rng.choice(TOPICS)
    feeling = rng.choice(FEELINGS)
    utterances = []
    for _ in range(rng.randint(2, 3)):
        strategy = rng.choice(STRATEGIES)
        utterances.append({"role": "seeker", "text": seeker_text(rng, strategy, topic, feeling)})
        utterances.append(
            {"role": "helper", "text": helper_text(rng, strategy, topic), "strategy": strategy}
        )
    situation = rng.choice(SITUATIONS).format(topic=topic, feeling=feeling)
    return {"id": f"fx{index:03d}", "situation": situation, "utterances": utterances}, topic, feeling


def dump(record):
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures" / "corpus"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    records = [dialogue(rng, i) for i in range(DIALOGUES)]

    start = 0
    for name, count in SPLITS:
        with open(out / f"{name}.jsonl", "w", encoding="utf-8") as f:
            for record, _, _ in records[start : start + count]:
                f.write(dump(record) + "\n")
        start += count

    entailments = {}
    for record, topic, feeling in records:
        for u in record["utterances"]:
            if u["role"] == "seeker" and u["text"] not in entailments:
                entailments[u["text"]] = [
                    {"relation": r, "entailment": t.format(topic=topic, feeling=feeling)}
                    for r, t in TUPLE_TEMPLATES.items()
                ]
    with open(out / "entailments.jsonl", "w", encoding="utf-8") as f:
        for text in sorted(entailments):
            f.write(dump({"text": text, "tuples": entailments[text]}) + "\n")

    with open(out / "keywords.json", "w", encoding="utf-8") as f:
        f.write(json.dumps(KEYWORDS, indent=2) + "\n")


if __name__ == "__main__":
    main()
