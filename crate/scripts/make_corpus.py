#!/usr/bin/env python3
"""Regenerate the 512x512 8-bit grayscale PGM test images from scikit-image
and matplotlib sample data."""
import os
import sys

import numpy as np
from PIL import Image
from skimage import data
import matplotlib

SIZE = 512


def to_gray(a):
    a = np.asarray(a)
    if a.ndim == 3:
        a = a[..., :3].astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    return a.astype(np.float64)


def square(a):
    r, c = a.shape
    s = min(r, c)
    r0, c0 = (r - s) // 2, (c - s) // 2
    a = a[r0:r0 + s, c0:c0 + s]
    if s != SIZE:
        img = Image.fromarray(np.clip(a, 0, 255).astype(np.uint8))
        a = np.asarray(img.resize((SIZE, SIZE), Image.LANCZOS), dtype=np.float64)
    return a


def save(a, path):
    a = np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (a.shape[1], a.shape[0]))
        fh.write(a.tobytes())


def hopper():
    p = os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data",
                     "sample_data", "grace_hopper.jpg")
    return np.asarray(Image.open(p))


STANDARD = {
    "camera": lambda: data.camera(),
    "astronaut": lambda: data.astronaut(),
    "hopper": hopper,
    "coffee": lambda: data.coffee(),
}

CORPUS = {
    "moon": lambda: data.moon(),
    "brick": lambda: data.brick(),
    "grass": lambda: data.grass(),
    "gravel": lambda: data.gravel(),
    "chelsea": lambda: data.chelsea(),
    "rocket": lambda: data.rocket(),
    "retina": lambda: data.retina(),
    "cell": lambda: data.cell(),
}


def main():
    root = sys.argv[1] if len(sys.argv) > 1 else "testdata"
    for sub, table in (("standard", STANDARD), ("corpus", CORPUS)):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
        for name, load in table.items():
            save(square(to_gray(load())), os.path.join(root, sub, name + ".pgm"))


if __name__ == "__main__":
    main()
