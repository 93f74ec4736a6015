#!/usr/bin/env python3
"""Generates the 50-record synthetic export used by the end-to-end tests.

Writes corpus50/savedrecs_1.txt and savedrecs_2.txt (25 records each),
gazetteer.tsv, and census.tsv: the per-city paper counts (n, n_top at the
10% level) computed here from the generator's own city assignment.
"""
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

# key -> (address template, lat, lon or None when the gazetteer lacks it)
CITIES = {
    ("LONDON", "", "ENGLAND"): ("Univ Coll London, Dept {dept}, London WC1E 6BT, England.", 51.5074, -0.1278),
    ("BERLIN", "", "GERMANY"): ("Humboldt Univ, Inst {dept}, D-10099 Berlin, Germany.", 52.52, 13.405),
    ("CAMBRIDGE", "MA", "USA"): ("Harvard Univ, Dept {dept}, Cambridge, MA 02138 USA.", 42.3736, -71.1097),
    ("ATHENS", "GA", "USA"): ("Univ Georgia, Dept {dept}, Athens, GA 30602 USA.", 33.9519, -83.3576),
    ("ATHENS", "OH", "USA"): ("Ohio Univ, Dept {dept}, Athens, OH 45701 USA.", 39.3292, -82.1013),
    ("AMSTERDAM", "", "NETHERLANDS"): ("Univ Amsterdam, Fac {dept}, NL-1012 CX Amsterdam, Netherlands.", 52.3676, 4.9041),
    ("KIEV", "", "UKRAINE"): ("Natl Acad Sci Ukraine, Inst {dept}, UA-03680 Kiev, Ukraine.", 50.4501, 30.5234),
    ("BEIJING", "", "PEOPLES R CHINA"): ("Peking Univ, Sch {dept}, Beijing 100871, Peoples R China.", 39.9042, 116.4074),
    ("SMALLTOWN", "", "NOWHERELAND"): ("Inst Nowhere, Dept {dept}, Smalltown, Nowhereland.", None, None),
}
DEPTS = ["Phys", "Chem", "Psychol", "Math"]


def main():
    rng = random.Random(20110302)
    keys = list(CITIES)
    london = keys[0]
    records = []
    for i in range(50):
        # 15 records tied at the top citation count, the rest clearly below.
        tc = 20 if i < 15 else rng.randint(0, 12)
        cities = {london}
        for k in rng.sample(keys[1:], rng.randint(0, 3)):
            cities.add(k)
        addresses = []
        for k in sorted(cities):
            tmpl = CITIES[k][0]
            ndept = 2 if rng.random() < 0.25 else 1
            for d in rng.sample(DEPTS, ndept):
                a = tmpl.format(dept=d)
                addresses.append(a)
                if rng.random() < 0.3:
                    addresses.append(a)  # co-author repeating the same address
        rng.shuffle(addresses)
        records.append({"ut": f"WOS:{i + 1:015d}", "tc": tc, "addresses": addresses, "cities": cities})

    # top-10%: k = 5, the 5th largest count is 20, so all 15 tied records are in.
    counts = sorted((r["tc"] for r in records), reverse=True)
    cutoff = counts[4]
    census = {}
    for r in records:
        for k in r["cities"]:
            n, top = census.get(k, (0, 0))
            census[k] = (n + 1, top + (1 if r["tc"] >= cutoff else 0))

    for part in (0, 1):
        with open(os.path.join(HERE, "corpus50", f"savedrecs_{part + 1}.txt"), "w") as f:
            f.write("FN Thomson Reuters Web of Knowledge\nVR 1.0\n")
            for r in records[part * 25:(part + 1) * 25]:
                f.write("PT J\n")
                f.write("AU Author, A\n   Author, B\n")
                f.write(f"TI Synthetic article {r['ut']}\n")
                f.write("SO JOURNAL OF SYNTHETIC RESULTS\n")
                f.write("DT Article\n")
                for j, a in enumerate(r["addresses"]):
                    f.write(("C1 " if j == 0 else "   ") + a + "\n")
                f.write(f"TC {r['tc']}\nPY 2008\nUT {r['ut']}\nER\n\n")
            f.write("EF\n")

    with open(os.path.join(HERE, "gazetteer.tsv"), "w") as f:
        f.write("# city\tregion\tcountry\tlat\tlon\tsource\n")
        for (city, region, country), (_, lat, lon) in sorted(CITIES.items()):
            if lat is not None:
                f.write(f"{city}\t{region}\t{country}\t{lat}\t{lon}\tatlas\n")

    with open(os.path.join(HERE, "census.tsv"), "w") as f:
        f.write(f"# records=50 cutoff={cutoff} top={sum(1 for r in records if r['tc'] >= cutoff)}\n")
        for (city, region, country), (n, top) in sorted(census.items()):
            f.write(f"{city}\t{region}\t{country}\t{n}\t{top}\n")


if __name__ == "__main__":
    main()
