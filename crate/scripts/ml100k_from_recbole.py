#!/usr/bin/env python3
"""Rebuild ML-100K `u.user`, `u.item`, `u.data` from the copy bundled in the
RecBole wheel (recbole/dataset_example/ml-100k, atomic-file format).

usage: ml100k_from_recbole.py <recbole.whl> <out_dir>

Titles get their release year re-appended, release date is synthesized as
01-Jan-<year>, and the video release date / IMDb URL fields are left empty.
Ratings, users and genre flags are carried over unchanged.
"""
import os
import sys
import zipfile

GENRES = ["unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
          "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
          "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western"]
PREFIX = "recbole/dataset_example/ml-100k/ml-100k."


def rows(zf, ext):
    text = zf.read(PREFIX + ext).decode("latin-1")
    lines = [l for l in text.split("\n") if l.strip()]
    return [l.split("\t") for l in lines[1:]]


def main():
    whl, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    zf = zipfile.ZipFile(whl)
    with open(os.path.join(out, "u.user"), "w", encoding="latin-1", newline="\n") as f:
        for r in rows(zf, "user"):
            f.write("|".join(r) + "\n")
    with open(os.path.join(out, "u.data"), "w", encoding="latin-1", newline="\n") as f:
        for r in rows(zf, "inter"):
            f.write("\t".join(r) + "\n")
    with open(os.path.join(out, "u.item"), "w", encoding="latin-1", newline="\n") as f:
        for mid, title, year, classes in rows(zf, "item"):
            if title == "unkonwn":
                title, date = "unknown", ""
            else:
                title = f"{title} ({year})" if year.isdigit() else title
                date = f"01-Jan-{year}" if year.isdigit() else ""
            genres = set(classes.split(" "))
            flags = ["1" if g in genres else "0" for g in GENRES]
            f.write("|".join([mid, title, date, "", ""] + flags) + "\n")


if __name__ == "__main__":
    main()
