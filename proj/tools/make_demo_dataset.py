#!/usr/bin/env python3
"""Regenerates the bundled demo assets: a tiny synthetic face-like dataset
plus the occlusion patch texture. Deterministic, stdlib only."""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
ASSETS = os.path.join(HERE, "..", "assets")

HEIGHT, WIDTH = 12, 10
SUBJECTS = 3
PER_SUBJECT = 6


def write_p2(path, pixels):
    rows = ["P2", f"{len(pixels[0])} {len(pixels)}", "255"]
    rows += [" ".join(str(v) for v in row) for row in pixels]
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def clamp(v):
    return max(0, min(255, int(v)))


def subject_image(subject, shot):
    # A fixed per-subject pattern with a mild per-shot perturbation; integer
    # arithmetic only, so regeneration is bit-stable everywhere.
    pixels = []
    for i in range(HEIGHT):
        row = []
        for j in range(WIDTH):
            base = (i * (3 + subject * 2) + j * (7 + subject * 5)) % 23
            wobble = ((i + 2 * j + shot * 3) * (subject + 3)) % 11
            shade = 40 + subject * 55 + base * 5 + wobble * 3 - shot
            row.append(clamp(shade))
        pixels.append(row)
    return pixels


def texture_image(size=64):
    pixels = []
    for i in range(size):
        row = []
        for j in range(size):
            row.append(clamp(((i * 29) ^ (j * 17)) % 256))
        pixels.append(row)
    return pixels


def main():
    demo = os.path.join(ASSETS, "demo")
    os.makedirs(demo, exist_ok=True)

    entries = []
    for subject in range(SUBJECTS):
        for shot in range(PER_SUBJECT):
            name = f"s{subject}_{shot}.pgm"
            write_p2(os.path.join(demo, name), subject_image(subject, shot))
            entries.append({"path": name, "label": f"subject{subject}"})

    manifest = {
        "name": "demo",
        "image_size": [HEIGHT, WIDTH],
        "entries": entries,
    }
    with open(os.path.join(demo, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    write_p2(os.path.join(ASSETS, "texture.pgm"), texture_image())
    print(f"wrote {SUBJECTS * PER_SUBJECT} images + manifest under {demo}")


if __name__ == "__main__":
    main()
