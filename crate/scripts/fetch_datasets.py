#!/usr/bin/env python3
"""Fetch the two public datasets used by the real-data checks and write them as CSV.

    data/ais.csv    Australian Institute of Sport athletes (DAAG::ais), 202 rows
    data/wines.csv  Piedmont wines (sn::wines), 178 rows

Sources are tried in order; the first that works wins. Needs network access
for wines. AIS also ships in the `rdatasets` wheel on PyPI.
"""

import argparse
import io
import sys
import tarfile
import urllib.request
from pathlib import Path

import pandas as pd

RDATASETS_CSV = "https://vincentarelbundock.github.io/Rdatasets/csv/{pkg}/{name}.csv"
CRAN_SN = "https://cran.r-project.org/src/contrib/Archive/sn/sn_2.1.1.tar.gz"
CRAN_SN_CURRENT = "https://cran.r-project.org/package=sn&format=source"


def fetch(url):
    with urllib.request.urlopen(url, timeout=60) as r:
        return r.read()


def from_rdatasets_csv(pkg, name):
    df = pd.read_csv(io.BytesIO(fetch(RDATASETS_CSV.format(pkg=pkg, name=name))))
    return df.drop(columns=[c for c in df.columns if c in ("rownames", "Unnamed: 0")])


def from_rdatasets_wheel(pkg, name):
    import rdatasets

    return rdatasets.data(pkg, name)


def from_cran_sn():
    import rdata

    for url in (CRAN_SN_CURRENT, CRAN_SN):
        try:
            blob = fetch(url)
        except OSError:
            continue
        with tarfile.open(fileobj=io.BytesIO(blob)) as tar:
            member = next(m for m in tar.getmembers() if m.name.endswith("data/wines.rda"))
            raw = tar.extractfile(member).read()
        parsed = rdata.parser.parse_data(raw)
        return rdata.conversion.convert(parsed)["wines"]
    raise OSError("CRAN unreachable")


def first_of(label, attempts):
    errors = []
    for how, f in attempts:
        try:
            df = f()
            print(f"{label}: {len(df)} rows via {how}")
            return df
        except Exception as e:  # noqa: BLE001
            errors.append(f"{how}: {e}")
    sys.exit(f"{label}: every source failed\n  " + "\n  ".join(errors))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--only", choices=["ais", "wines"])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    if args.only in (None, "ais"):
        ais = first_of(
            "ais",
            [
                ("rdatasets wheel", lambda: from_rdatasets_wheel("DAAG", "ais")),
                ("Rdatasets csv", lambda: from_rdatasets_csv("DAAG", "ais")),
            ],
        )
        assert len(ais) == 202 and {"bmi", "lbm"} <= set(ais.columns)
        ais.to_csv(args.out / "ais.csv", index=False)

    if args.only in (None, "wines"):
        wines = first_of(
            "wines",
            [
                ("Rdatasets csv", lambda: from_rdatasets_csv("sn", "wines")),
                ("CRAN sn tarball", from_cran_sn),
            ],
        )
        assert len(wines) == 178 and {"uronic", "hue"} <= set(wines.columns)
        wines.to_csv(args.out / "wines.csv", index=False)


if __name__ == "__main__":
    main()
