#!/usr/bin/env python3
"""Fetch the standard grayscale test images used by the benchmark.

The images are not redistributed with this repository. This script pulls them
from public package archives on PyPI, converts them to 8-bit grayscale and
writes `<out>/<id>.pgm`. Images that cannot be fetched are listed at the end;
drop a grayscale (or RGB) PNG/TIFF/PGM named `<id>.*` into `<out>` by hand and
re-run with `--convert-only` to normalize it.

Usage: scripts/fetch_standard_images.py [--out data/standard] [--convert-only]
"""
import argparse
import io
import sys
import tarfile
import urllib.request
import zipfile
from pathlib import Path

from PIL import Image

# id -> list of (archive url, member suffix). First source that works wins.
TARGETS = {
    "lena": [
        ("https://files.pythonhosted.org/packages/df/26/e87ebb6c083d8c647478ac2a0e2bef59f8543bd01e35888590a9457d0a5b/scikit-image-0.10.1.tar.gz",
         "skimage/data/lena.png"),
    ],
    "cameraman": [
        ("https://files.pythonhosted.org/packages/df/26/e87ebb6c083d8c647478ac2a0e2bef59f8543bd01e35888590a9457d0a5b/scikit-image-0.10.1.tar.gz",
         "skimage/data/camera.png"),
    ],
    "peppers": [],
    # Kodak PhotoCD image 23 (two parrots), RGB 768x512.
    "parrot": [
        ("https://files.pythonhosted.org/packages/79/ad/65f4442d9da24e9dcfafedd6305ddf466b10de1c3e6bd5b77963c60cf302/sporco-0.2.2.post1.tar.gz",
         "sporco/data/kodim23.png"),
    ],
    "house": [],
}

_cache = {}


def fetch_member(url, suffix):
    if url not in _cache:
        print(f"downloading {url}", file=sys.stderr)
        with urllib.request.urlopen(url, timeout=300) as resp:
            _cache[url] = resp.read()
    blob = _cache[url]
    if url.endswith((".tar.gz", ".tgz")):
        with tarfile.open(fileobj=io.BytesIO(blob)) as tar:
            for m in tar.getmembers():
                if m.name.endswith(suffix):
                    return tar.extractfile(m).read()
    else:
        with zipfile.ZipFile(io.BytesIO(blob)) as zf:
            for name in zf.namelist():
                if name.endswith(suffix):
                    return zf.read(name)
    raise FileNotFoundError(f"{suffix} not in {url}")


def to_pgm(data, dest):
    img = Image.open(io.BytesIO(data))
    img = img.convert("L")  # ITU-R 601-2 luma for RGB sources
    img.save(dest, format="PPM")  # mode L is written as binary PGM (P5)
    return img.size


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/standard")
    ap.add_argument("--convert-only", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    missing = []
    for image_id, sources in TARGETS.items():
        dest = out / f"{image_id}.pgm"
        manual = [p for p in out.glob(f"{image_id}.*") if p.suffix != ".pgm"]
        if manual:
            size = to_pgm(manual[0].read_bytes(), dest)
            print(f"{image_id}: converted {manual[0].name} {size}")
            continue
        if dest.exists():
            print(f"{image_id}: present")
            continue
        if args.convert_only:
            missing.append(image_id)
            continue
        for url, suffix in sources:
            try:
                size = to_pgm(fetch_member(url, suffix), dest)
                print(f"{image_id}: {size} from {url.rsplit('/', 1)[-1]}")
                break
            except Exception as exc:  # network or archive layout problems
                print(f"{image_id}: {exc}", file=sys.stderr)
        else:
            missing.append(image_id)
    if missing:
        print("missing (place manually): " + ", ".join(missing))
    return 0


if __name__ == "__main__":
    sys.exit(main())
