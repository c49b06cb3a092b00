"""Regenerate the bundled test images under tests/data/.

natural/: 20 photographs (224x224) cropped from the sample images that ship
with scikit-image and scikit-learn.
decoder/: small PNG files plus a plain-text pixel dump written by Pillow,
used to cross-check the in-tree decoder.
"""
import os

import numpy as np
from PIL import Image
import skimage
import sklearn.datasets

ROOT = os.path.join(os.path.dirname(__file__), "..", "tests", "data")
SK = os.path.join(os.path.dirname(skimage.__file__), "data")
SKL = os.path.join(os.path.dirname(sklearn.datasets.__file__), "images")

# (file, crop box as (left, top, side) or None for a centered square)
SOURCES = [
    (f"{SK}/astronaut.png", None),
    (f"{SK}/camera.png", None),
    (f"{SK}/chelsea.png", None),
    (f"{SK}/coffee.png", None),
    (f"{SK}/rocket.jpg", None),
    (f"{SK}/motorcycle_left.png", None),
    (f"{SK}/retina.jpg", None),
    (f"{SK}/hubble_deep_field.jpg", None),
    (f"{SKL}/china.jpg", (0, 0, 427)),
    (f"{SKL}/china.jpg", (213, 0, 427)),
    (f"{SKL}/flower.jpg", (0, 0, 427)),
    (f"{SKL}/flower.jpg", (213, 0, 427)),
    (f"{SK}/coins.png", None),
    (f"{SK}/moon.png", None),
    (f"{SK}/brick.png", None),
    (f"{SK}/grass.png", None),
    (f"{SK}/gravel.png", None),
    (f"{SK}/page.png", None),
    (f"{SK}/ihc.png", None),
    (f"{SK}/cell.png", None),
]


def square(img, box):
    w, h = img.size
    if box is None:
        side = min(w, h)
        left, top = (w - side) // 2, (h - side) // 2
    else:
        left, top, side = box
    return img.crop((left, top, left + side, top + side))


def natural():
    out = os.path.join(ROOT, "natural")
    os.makedirs(out, exist_ok=True)
    for i, (path, box) in enumerate(SOURCES):
        img = Image.open(path)
        img = img.convert("L" if img.mode in ("L", "I", "I;16") else "RGB")
        img = square(img, box).resize((224, 224), Image.LANCZOS)
        name = os.path.splitext(os.path.basename(path))[0]
        img.save(os.path.join(out, f"{i:02d}_{name}.png"))


def decoder():
    out = os.path.join(ROOT, "decoder")
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(7)
    cases = {
        "rgb_5x3": rng.integers(0, 256, (3, 5, 3), dtype=np.uint8),
        "gray_4x6": rng.integers(0, 256, (6, 4), dtype=np.uint8),
        "rgba_3x3": rng.integers(0, 256, (3, 3, 4), dtype=np.uint8),
    }
    for name, arr in cases.items():
        img = Image.fromarray(arr)
        img.save(os.path.join(out, f"{name}.png"))
        # Dump what Pillow decodes back, alpha stripped.
        back = np.asarray(Image.open(os.path.join(out, f"{name}.png")))
        if back.ndim == 3 and back.shape[2] == 4:
            back = back[:, :, :3]
        h, w = back.shape[:2]
        c = 1 if back.ndim == 2 else back.shape[2]
        with open(os.path.join(out, f"{name}.txt"), "w") as f:
            f.write(f"{w} {h} {c}\n")
            f.write(" ".join(str(int(v)) for v in back.reshape(-1)) + "\n")
    # Palette PNG goes through the same RGB path.
    pal = Image.fromarray(rng.integers(0, 256, (4, 4, 3), dtype=np.uint8)).quantize(colors=5)
    pal.save(os.path.join(out, "palette_4x4.png"))
    back = np.asarray(Image.open(os.path.join(out, "palette_4x4.png")).convert("RGB"))
    with open(os.path.join(out, "palette_4x4.txt"), "w") as f:
        f.write("4 4 3\n")
        f.write(" ".join(str(int(v)) for v in back.reshape(-1)) + "\n")


if __name__ == "__main__":
    natural()
    decoder()
