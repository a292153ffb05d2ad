#!/usr/bin/env python3
"""Regenerates the toy corpus and resource files in this directory.

Threads are built around six forum topics. Related questions and comments
drawn from the thread's topic are labeled relevant, others irrelevant, with
a little label noise so the ranking problem is not trivially separable.
"""

import json
import math
import random
from pathlib import Path

SEED = 20160616
OUT = Path(__file__).resolve().parent

TOPICS = {
    "visa": {
        "hub": "immigration",
        "words": ["visa", "permit", "renew", "sponsor", "passport", "embassy", "residency", "stamp", "expire", "immigration"],
        "frames": {"renew": "Renewing", "expire": "Expiration", "sponsor": "Sponsorship", "stamp": "Documents"},
    },
    "housing": {
        "hub": "accommodation",
        "words": ["apartment", "rent", "landlord", "lease", "deposit", "furnished", "villa", "bedroom", "tenant", "contract"],
        "frames": {"rent": "Renting", "lease": "Renting", "deposit": "Commerce_pay", "contract": "Documents"},
    },
    "car": {
        "hub": "vehicle",
        "words": ["car", "license", "driving", "insurance", "traffic", "garage", "engine", "fine", "registration", "buy"],
        "frames": {"buy": "Commerce_buy", "driving": "Operate_vehicle", "fine": "Fining", "license": "Documents"},
    },
    "job": {
        "hub": "employment",
        "words": ["job", "salary", "interview", "employer", "resign", "contract", "vacancy", "engineer", "hire", "overtime"],
        "frames": {"hire": "Hiring", "resign": "Quitting", "salary": "Commerce_pay", "interview": "Hiring"},
    },
    "bank": {
        "hub": "finance",
        "words": ["bank", "account", "loan", "transfer", "money", "card", "interest", "atm", "exchange", "pay"],
        "frames": {"pay": "Commerce_pay", "transfer": "Transfer", "loan": "Borrowing", "exchange": "Exchange"},
    },
    "school": {
        "hub": "education",
        "words": ["school", "teacher", "fees", "kids", "curriculum", "admission", "uniform", "grade", "nursery", "exam"],
        "frames": {"fees": "Commerce_pay", "admission": "Admitting", "exam": "Examination", "teacher": "Education_teaching"},
    },
}

# inflected form -> lemma
INFLECTIONS = {
    "visas": "visa", "permits": "permit", "renewing": "renew", "renewed": "renew", "expired": "expire",
    "apartments": "apartment", "renting": "rent", "landlords": "landlord", "deposits": "deposit",
    "cars": "car", "licenses": "license", "fines": "fine", "bought": "buy",
    "jobs": "job", "salaries": "salary", "interviews": "interview", "hired": "hire",
    "banks": "bank", "accounts": "account", "loans": "loan", "paid": "pay", "cards": "card",
    "schools": "school", "teachers": "teacher", "exams": "exam", "grades": "grade",
    "is": "be", "are": "be", "was": "be", "does": "do", "did": "do", "has": "have", "had": "have",
}

STOPWORDS = [
    "a", "an", "the", "is", "are", "was", "be", "to", "of", "in", "on", "for", "and", "or", "i", "my", "me",
    "you", "your", "it", "this", "that", "do", "does", "did", "have", "has", "had", "how", "what", "where",
    "can", "any", "with", "about", "if", "so", "just", "from", "there", "here", "we", "they", "at", "by", "will",
]

GENERIC = ["qatar", "doha", "help", "advice", "anyone", "know", "please", "need", "best", "good", "time", "month", "year", "office", "people"]
CHATTER = ["thanks", "lol", "same", "problem", "here", "welcome", "forum", "agree", "haha", "cheers", "wow", "really"]

OPENERS = ["how do i", "where can i", "does anyone know about", "what is the best way to handle", "any advice on"]
FILLERS = ["in qatar", "this month", "for my family", "as soon as possible", "with my employer", "in doha"]


def inflect(rng, word):
    forms = [f for f, lemma in INFLECTIONS.items() if lemma == word]
    if forms and rng.random() < 0.35:
        return rng.choice(forms)
    return word


def topic_words(rng, topic, k):
    return [inflect(rng, w) for w in rng.sample(TOPICS[topic]["words"], k)]


def question(rng, topic):
    subject = " ".join(topic_words(rng, topic, 3))
    body = " ".join(
        [rng.choice(OPENERS)]
        + topic_words(rng, topic, 4)
        + [rng.choice(FILLERS)]
        + rng.sample(GENERIC, 2)
    )
    return subject, body


def comment_text(rng, topic, kind):
    if kind == "good":
        words = topic_words(rng, topic, 4) + rng.sample(STOPWORDS, 3) + rng.sample(GENERIC, 1)
    elif kind == "useful":
        other = rng.choice([t for t in TOPICS if t != topic])
        words = topic_words(rng, topic, 2) + topic_words(rng, other, 1) + rng.sample(CHATTER, 2) + rng.sample(STOPWORDS, 2)
    else:
        other = rng.choice([t for t in TOPICS if t != topic])
        words = rng.sample(CHATTER, 3) + rng.sample(STOPWORDS, 2) + (topic_words(rng, other, 2) if rng.random() < 0.5 else [])
    rng.shuffle(words)
    return " ".join(words)


def noisy(rng, label, alternatives, p=0.1):
    return rng.choice(alternatives) if rng.random() < p else label


def thread(rng, index):
    topic = rng.choice(list(TOPICS))
    tid = f"T{index:02d}"
    subject, body = question(rng, topic)
    rel_topics = [topic, topic] + rng.sample([t for t in TOPICS if t != topic], 2)
    rng.shuffle(rel_topics)
    ranks = rng.sample(range(1, 11), 4)
    ranks.sort()
    # on-topic related questions tend to be retrieved higher
    order = sorted(range(4), key=lambda i: (rel_topics[i] != topic, rng.random()))
    related = []
    for slot, ri in enumerate(order):
        rtopic = rel_topics[ri]
        rid = f"{tid}_R{slot + 1}"
        rs, rb = question(rng, rtopic)
        same = rtopic == topic
        qlabel = ("PerfectMatch" if rng.random() < 0.5 else "Relevant") if same else "Irrelevant"
        qlabel = noisy(rng, qlabel, ["PerfectMatch", "Relevant", "Irrelevant"])
        comments = []
        kinds = ["good", "useful", "bad", rng.choice(["good", "bad"])]
        rng.shuffle(kinds)
        for ci, kind in enumerate(kinds):
            to_relq = {"good": "Good", "useful": "PotentiallyUseful", "bad": "Bad"}[kind]
            to_relq = noisy(rng, to_relq, ["Good", "PotentiallyUseful", "Bad"])
            if same and kind == "good":
                to_orgq = "Good"
            elif same and kind == "useful":
                to_orgq = "PotentiallyUseful"
            else:
                to_orgq = "Bad"
            to_orgq = noisy(rng, to_orgq, ["Good", "PotentiallyUseful", "Bad"])
            comments.append({
                "id": f"{rid}_C{ci + 1}",
                "text": comment_text(rng, rtopic, kind),
                "relevance_to_relq": to_relq,
                "relevance_to_orgq": to_orgq,
            })
        related.append({
            "id": rid,
            "subject": rs,
            "body": rb,
            "relevance_to_orgq": qlabel,
            "search_rank": ranks[slot],
            "comments": comments,
        })
    return {"id": tid, "subject": subject, "body": body, "related": related}


def write_lines(name, lines):
    (OUT / name).write_text("".join(f"{line}\n" for line in lines))


def vectors(rng, dim=8):
    centers = {}
    for topic in TOPICS:
        c = [rng.gauss(0, 1) for _ in range(dim)]
        centers[topic] = c
    rows = []
    for topic, spec in TOPICS.items():
        for w in spec["words"]:
            v = [x + rng.gauss(0, 0.35) for x in centers[topic]]
            rows.append((w, v))
    for w in GENERIC + CHATTER:
        rows.append((w, [rng.gauss(0, 1) for _ in range(dim)]))
    seen = set()
    unique = []
    for w, v in rows:
        if w not in seen:
            seen.add(w)
            unique.append((w, v))
    lines = [f"{len(unique)} {dim}"]
    for w, v in unique:
        norm = math.sqrt(sum(x * x for x in v))
        lines.append(w + " " + " ".join(f"{x / norm:.6f}" for x in v))
    return lines


def network(rng):
    edges, senses = [], []
    for topic, spec in TOPICS.items():
        hub = f"bn:{spec['hub']}"
        for w in spec["words"]:
            concept = f"bn:{w}"
            if f"{w}\t{concept}" not in senses:
                senses.append(f"{w}\t{concept}")
            edges.append(f"{concept}\tis_a\t{hub}\t{rng.choice([0.6, 0.8, 1.0])}")
        edges.append(f"{hub}\trelated_to\tbn:expat_life\t0.5")
    # a few ambiguous lemmas with a second sense
    senses += ["fine\tbn:fine_quality", "card\tbn:greeting_card", "grade\tbn:slope", "stamp\tbn:postage"]
    return edges, senses


def frame_lexicon():
    rows = []
    for spec in TOPICS.values():
        for lemma, frame in spec["frames"].items():
            rows.append(f"{lemma}\t{frame}")
    rows += ["need\tNeeding", "help\tAssistance", "know\tAwareness", "buy\tGetting"]
    return sorted(set(rows))


def nouns():
    words = {w for spec in TOPICS.values() for w in spec["words"]}
    words -= {"renew", "expire", "sponsor", "resign", "hire", "buy", "pay", "transfer", "exchange", "driving", "furnished"}
    return sorted(words | {"qatar", "doha", "office", "people", "month", "year", "time", "forum", "problem"})


def main():
    rng = random.Random(SEED)
    threads = [thread(rng, i + 1) for i in range(20)]
    write_lines("train.jsonl", [json.dumps(t, separators=(",", ":")) for t in threads[:14]])
    write_lines("dev.jsonl", [json.dumps(t, separators=(",", ":")) for t in threads[14:]])
    write_lines("stopwords.txt", STOPWORDS)
    write_lines("lemmas.tsv", [f"{f}\t{l}" for f, l in sorted(INFLECTIONS.items())])
    write_lines("nouns.txt", nouns())
    write_lines("vectors.txt", vectors(rng))
    edges, senses = network(rng)
    write_lines("kg_edges.tsv", edges)
    write_lines("kg_senses.tsv", senses)
    write_lines("frames.tsv", frame_lexicon())


if __name__ == "__main__":
    main()
