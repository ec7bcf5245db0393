#!/usr/bin/env python3
"""Regenerates fixtures/parsers: ICDAR and TD500 ground-truth files plus
malformed files with the expected failing line numbers.

The output is committed; rerunning with the same seed reproduces it exactly.
"""

import argparse
import math
import random
from pathlib import Path

BOM = "﻿"
WORDS = ["EXIT", "Genaxis Theatre", "###", "café", "24/7", "A,B", "", "SALE 50%", "東京", "x"]


def icdar_line(rng: random.Random) -> str:
    cx, cy = rng.randint(20, 1260), rng.randint(20, 700)
    w, h = rng.randint(6, 300), rng.randint(4, 60)
    t = rng.uniform(-0.8, 0.8) if rng.random() < 0.5 else 0.0
    c, s = math.cos(t), math.sin(t)
    pts = []
    for u, v in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)):
        pts += [round(cx + c * u - s * v), round(cy + s * u + c * v)]
    text = rng.choice(WORDS)
    fields = ",".join(str(p) for p in pts)
    return fields if text == "" and rng.random() < 0.5 else f"{fields},{text}"


def td500_line(rng: random.Random, index: int) -> str:
    w, h = rng.randint(20, 600), rng.randint(10, 80)
    x, y = rng.randint(0, 1600 - w), rng.randint(0, 1200 - h)
    theta = rng.uniform(-math.pi / 2, math.pi / 2) if rng.random() < 0.7 else 0.0
    sep = " " if rng.random() < 0.8 else "\t"
    return sep.join([str(index), str(int(rng.random() < 0.2)), str(x), str(y), str(w), str(h), f"{theta:.15g}"])


def write(path: Path, lines, crlf=False, bom=False, trailing_newline=True):
    eol = "\r\n" if crlf else "\n"
    text = eol.join(lines) + (eol if trailing_newline else "")
    path.write_bytes(((BOM if bom else "") + text).encode("utf-8"))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures" / "parsers"))
    ap.add_argument("--seed", type=int, default=20240607)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    for sub in ("icdar", "td500", "malformed"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    for k in range(10):
        lines = [icdar_line(rng) for _ in range(20)]
        write(out / "icdar" / f"gt_img_{k + 1}.txt", lines, crlf=k % 3 == 0, bom=k % 2 == 0,
              trailing_newline=k != 4)

    for k in range(5):
        lines = [td500_line(rng, i) for i in range(20)]
        write(out / "td500" / f"IMG_{1000 + k}.gt", lines, crlf=k == 2, bom=k == 3)

    # (file, format, lines, 1-based line number of the first bad line)
    bad = [
        ("too_few_fields.txt", "icdar", ["1,2,3,4,5,6,7,8,ok", "1,2,3"], 2),
        ("text_in_coords.txt", "icdar", ["1,2,3,4,5,6,7,8,ok", "", "1,2,3,4,five,6,7,8,x"], 3),
        ("empty_coord.txt", "icdar", ["1,,3,4,5,6,7,8,x"], 1),
        ("crlf_bad.txt", "icdar", ["1,2,3,4,5,6,7,8,a", "1,2,3,4,5,6,7,8,b", "1,2,3,4,5,6,7"], 3),
        ("inf_coord.txt", "icdar", ["1,2,3,4,5,6,7,8,a", "1,2,3,4,inf,6,7,8,b"], 2),
        ("two_tokens.gt", "td500", ["0 0 1 2 30 40 0.1", "x y"], 2),
        ("six_fields.gt", "td500", ["0 0 1 2 30 40"], 1),
        ("bad_difficulty.gt", "td500", ["0 0 1 2 30 40 0", "1 0 1 2 30 40 0", "2 7 1 2 30 40 0"], 3),
        ("zero_width.gt", "td500", ["0 0 1 2 30 40 0", "1 0 1 2 0 40 0"], 2),
        ("angle_text.gt", "td500", ["", "0 0 1 2 30 40 deg"], 2),
    ]
    manifest = []
    for name, fmt, lines, expect in bad:
        write(out / "malformed" / name, lines, crlf=name.startswith("crlf"))
        manifest.append(f"{name} {fmt} {expect}")
    (out / "malformed" / "expected.txt").write_text("\n".join(manifest) + "\n")


if __name__ == "__main__":
    main()
