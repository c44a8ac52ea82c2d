"""Regenerates the synthetic registry snapshots used by tests and examples."""
import json
from pathlib import Path

HERE = Path(__file__).parent


def gvl():
    vendors = []
    for vid in range(1, 671):
        if vid % 37 == 0:
            continue  # the real list has gaps where vendors were removed
        if vid % 11 == 0:
            consent, legint = [], [p for p in range(1, 6) if (vid + p) % 2]
        else:
            consent = sorted({1} | {p for p in range(2, 6) if (vid + p) % 3})
            legint = [p for p in range(1, 6) if p not in consent and vid % 5 == 0]
        vendors.append({"id": vid, "name": f"Fixture Vendor {vid}",
                        "purposeIds": consent, "legIntPurposeIds": legint})
    return {"vendorListVersion": 168, "lastUpdated": "2019-09-26T16:00:00Z",
            "vendors": vendors}


def cmps():
    return {"cmps": [{"id": i, "name": f"Fixture CMP {i}"} for i in range(2, 266)]}


def trackers():
    cats = {}
    for cat, count in (("Advertising", 24), ("Analytics", 10), ("Social", 6)):
        entries = []
        for i in range(1, count + 1):
            slug = f"{cat.lower()}-{i:02d}"
            entries.append({f"Fixture {cat} {i}": {
                f"https://{slug}.com/": [f"{slug}.com", f"{slug}-cdn.net"],
                "dnt": "eff"}})
        cats[cat] = entries
    return {"license": "synthetic fixture", "categories": cats}


for name, doc in (("gvl-fixture.json", gvl()), ("cmp-list-fixture.json", cmps()),
                  ("trackers-fixture.json", trackers())):
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n")
