#!/usr/bin/env python3
"""Writes the synthetic 60-song, 3-system, 4-genre corpus next to this file.

Deterministic: rerunning reproduces every byte. Each song has a random
chord sequence as ground truth; the pseudo annotation and the three
systems' predictions are corrupted copies with different error rates.
"""
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
ROOTS = ["C", "C#", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"]
QUALITIES = ["maj", "min", "7", "min7", "maj7", "", "sus4", "dim"]
GENRES = ["rock", "pop", "jazz", "folk"]
SYSTEMS = {"alpha": (0.18, 0.25), "beta": (0.28, 0.35), "gamma": (0.38, 0.2)}
PSEUDO = (0.08, 0.15)
N_SONGS = 60
N_VALIDATION = 24


def chord(rng):
    r = rng.random()
    if r < 0.04:
        return "N"
    if r < 0.06:
        return "X"
    root = rng.choice(ROOTS)
    q = rng.choice(QUALITIES)
    label = root if q == "" else f"{root}:{q}"
    if rng.random() < 0.05:
        label += "/5"
    return label


def ground_truth(rng):
    t = 0.0
    segs = []
    length = rng.uniform(40.0, 90.0)
    if rng.random() < 0.5:
        lead = round(rng.uniform(0.2, 1.5), 3)
        segs.append((0.0, lead, "N"))
        t = lead
    while t < length:
        d = round(rng.choice([1.0, 2.0, 2.0, 4.0]) * rng.uniform(0.45, 0.55), 3)
        segs.append((t, round(t + d, 3), chord(rng)))
        t = round(t + d, 3)
    return segs


def corrupt(rng, segs, relabel, jitter):
    """Relabels a fraction of segments and moves some boundaries."""
    bounds = [s[0] for s in segs] + [segs[-1][1]]
    for i in range(1, len(bounds) - 1):
        if rng.random() < jitter:
            lo = bounds[i - 1] + 0.05
            hi = bounds[i + 1] - 0.05
            if hi > lo:
                bounds[i] = round(min(hi, max(lo, bounds[i] + rng.uniform(-0.4, 0.4))), 3)
    out = []
    for i, (_, _, label) in enumerate(segs):
        if rng.random() < relabel:
            label = chord(rng)
        out.append((bounds[i], bounds[i + 1], label))
    # Gaps between chords read as no-chord; drop a few segments entirely.
    return [s for s in out if rng.random() > 0.02 or s is out[0]]


def write_lab(path, segs):
    with open(path, "w", newline="\n") as f:
        for on, off, label in segs:
            f.write(f"{on:.3f}\t{off:.3f}\t{label}\n")


def main():
    rng = random.Random(20240613)
    labs = os.path.join(HERE, "labs")
    os.makedirs(labs, exist_ok=True)
    songs = []
    for k in range(N_SONGS):
        sid = f"song{k + 1:02d}"
        genre = GENRES[rng.randrange(len(GENRES))] if k >= 4 else GENRES[k]
        gt = ground_truth(rng)
        entry = {"id": sid, "genre": genre, "gt": None}
        if k < N_VALIDATION:
            write_lab(os.path.join(labs, f"{sid}.gt.lab"), gt)
            entry["gt"] = f"labs/{sid}.gt.lab"
        write_lab(os.path.join(labs, f"{sid}.pseudo.lab"), corrupt(rng, gt, *PSEUDO))
        entry["pseudo"] = f"labs/{sid}.pseudo.lab"
        entry["predictions"] = {}
        for name, (relabel, jitter) in SYSTEMS.items():
            # Song difficulty shifts every system's error rate together.
            difficulty = rng.uniform(-0.1, 0.1)
            write_lab(
                os.path.join(labs, f"{sid}.{name}.lab"),
                corrupt(rng, gt, max(0.0, relabel + difficulty), jitter),
            )
            entry["predictions"][name] = f"labs/{sid}.{name}.lab"
        songs.append(entry)
    manifest = {"systems": list(SYSTEMS), "songs": songs}
    with open(os.path.join(HERE, "manifest.json"), "w", newline="\n") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
