#!/usr/bin/env python3
"""Regenerates tests/fixtures: 10 paintings (2 per emotion), 5 MIDI files of
about 65 s (one per source cluster) and their annotation CSVs."""

import argparse
import json
import random
import struct
from pathlib import Path

from PIL import Image

EMOTIONS = ["angry", "fun", "happy", "neutral", "sad"]

# cluster -> (emotion it maps to, scale, tempo in quarter notes per second)
CLUSTERS = {
    "cluster_1": ("happy", [60, 62, 64, 65, 67, 69, 71, 72], 4.0),
    "cluster_2": ("fun", [60, 63, 65, 66, 67, 70, 72], 3.0),
    "cluster_3": ("sad", [57, 59, 60, 62, 64, 65, 67, 69], 1.5),
    "cluster_4": ("neutral", [60, 62, 64, 67, 69, 72], 2.0),
    "cluster_5": ("angry", [40, 41, 43, 46, 47, 52], 5.0),
}

SIZE = 64


def painting(emotion, rng):
    img = Image.new("RGB", (SIZE, SIZE))
    px = img.load()
    for y in range(SIZE):
        for x in range(SIZE):
            n = rng.randint(-12, 12)
            if emotion == "sad":
                c = (30 + n // 2, 45 + n // 2, 110 + y + n)
            elif emotion == "happy":
                c = (235 + n // 3, 205 + n, 60 + x // 2 + n)
            elif emotion == "angry":
                hot = (x + y) // 6 % 2 == 0
                c = (220 + n // 2, 20 + n // 2, 15) if hot else (25, 5, 5)
            elif emotion == "fun":
                k = (x // 8 + y // 8) % 3
                c = [(240, 60 + n, 200), (40, 220 + n // 2, 90), (250, 170, 20 + n)][k]
            else:
                g = 120 + x // 4 + n // 3
                c = (g, g, g + 4)
            px[x, y] = tuple(max(0, min(255, v)) for v in c)
    return img


def vlq(n):
    out = [n & 0x7F]
    n >>= 7
    while n:
        out.append(0x80 | (n & 0x7F))
        n >>= 7
    return bytes(reversed(out))


def midi(scale, qps, seconds, rng):
    tpq = 480
    tempo = int(round(1_000_000 / qps))
    events = []  # (tick, order, bytes)
    tick = 0
    total = int(seconds * qps * tpq)
    while tick < total:
        key = rng.choice(scale)
        dur = rng.choice([tpq // 2, tpq, tpq])
        vel = rng.randint(70, 110)
        end = min(tick + dur, total)
        events.append((tick, 1, bytes([0x90, key, vel])))
        events.append((end, 0, bytes([0x80, key, 0])))
        tick += dur
    events.sort(key=lambda e: (e[0], e[1]))
    track = bytearray(b"\x00\xff\x51\x03" + tempo.to_bytes(3, "big"))
    last = 0
    for t, _, data in events:
        track += vlq(t - last) + data
        last = t
    track += b"\x00\xff\x2f\x00"
    return b"MThd" + struct.pack(">IHHH", 6, 0, 1, tpq) + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    out = Path(args.out)
    rng = random.Random(args.seed)

    pdir = out / "paintings"
    pdir.mkdir(parents=True, exist_ok=True)
    rows = ["path,emotion"]
    for emotion in EMOTIONS:
        for i in (1, 2):
            name = f"{emotion}_{i:02d}.png"
            painting(emotion, rng).save(pdir / name, optimize=False)
            rows.append(f"{name},{emotion}")
    (pdir / "annotations.csv").write_text("\n".join(rows) + "\n")

    mdir = out / "midi"
    mdir.mkdir(parents=True, exist_ok=True)
    rows = ["path,cluster"]
    for cluster, (emotion, scale, qps) in CLUSTERS.items():
        name = f"{emotion}_theme.mid"
        (mdir / name).write_bytes(midi(scale, qps, 65.0, rng))
        rows.append(f"{name},{cluster}")
    (mdir / "annotations.csv").write_text("\n".join(rows) + "\n")

    # Published scores of the four fine-tuned variants, used only to check table rendering.
    table = {
        "rows": [
            {"model": "MG-S Emotive", "fad": 7.02, "clap": 0.075, "kl": 0.054, "thd": 1.79, "isc": 1.044},
            {"model": "MG-S Narrative", "fad": 5.22, "clap": 0.096, "kl": 0.045, "thd": 1.73, "isc": 1.032},
            {"model": "MG-S Lyrical", "fad": 5.06, "clap": 0.11, "kl": 0.046, "thd": 1.92, "isc": 1.031},
            {"model": "MG-S Optimized", "fad": 5.54, "clap": 0.13, "kl": 0.012, "thd": 1.75, "isc": 1.033},
        ]
    }
    (out / "published_scores.json").write_text(json.dumps(table, indent=2) + "\n")


if __name__ == "__main__":
    main()
