#!/usr/bin/env python3
"""Generate the bundled synthetic corpus and evaluation fixtures.

Writes plain-text and region-JSON documents about industrial sites, a
retention benchmark, a small reference ontology and gold triples. Output is
deterministic for a given seed.
"""

import argparse
import json
import random
from pathlib import Path

CITIES = ["Paris", "Berlin", "Lyon", "Hamburg", "Oslo", "Turin", "Madrid", "Lisbon", "Vienna", "Geneva", "Rotterdam", "Porto"]
ORGS = ["Norden Corporation", "Valtek Group", "Helio Labs", "Arcadia Institute", "Brightwater Agency", "Meridian Consortium"]
PEOPLE = ["Alice Moreau", "Bob Lindqvist", "Carol Esposito", "David Haas", "Elena Novak", "Farid Qasim",
          "Grace Okafor", "Hugo Brandt", "Ingrid Solberg", "Jonas Weber", "Karim Benali", "Lena Fischer"]
GREEK = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta", "Theta", "Iota", "Kappa", "Lambda", "Sigma"]
SITES = ["North", "South", "Harbor", "Ridge", "Valley", "Lakeside", "Summit", "Riverside", "Mill", "Quarry", "Forest", "Bay"]
PROJECTS = ["Horizon Project", "Bluewater Initiative", "Kestrel Program", "Lumen Project", "Orbit Initiative", "Cedar Program"]

FILLER = [
    "the crew recorded pressure readings twice per hour and flagged every deviation for later review.",
    "the maintenance window was kept short so that production could resume before the morning deliveries.",
    "operators compared the readings with the values logged during the previous inspection cycle.",
    "several minor leaks were repaired and the affected lines were flushed and tested again.",
    "the night shift noted a slight vibration that disappeared once the load was reduced.",
    "spare parts were stocked in the storeroom next to the control room for quick access.",
    "every alarm was acknowledged within two minutes and documented in the shift log.",
    "the safety briefing covered lockout steps, protective equipment and emergency exits.",
    "the control room kept a paper backup of the schedule in case the terminals failed.",
    "energy use dropped noticeably after the insulation on the steam lines was renewed.",
]


def sentence(s):
    return s[0].upper() + s[1:]


def site_doc(i, rng):
    city = CITIES[i % len(CITIES)]
    org = ORGS[i % len(ORGS)]
    other_org = ORGS[(i + 1) % len(ORGS)]
    lead = PEOPLE[i % len(PEOPLE)]
    engineer = PEOPLE[(i + 3) % len(PEOPLE)]
    analyst = PEOPLE[(i + 7) % len(PEOPLE)]
    g = GREEK[i]
    plant = f"{SITES[i]} Plant"
    pump = f"{g} Feed Pump"
    tank = f"{g} Storage Tank"
    valve = f"{g} Intake Valve"
    sensor = f"{g} Flow Sensor"
    turbine = f"{g} Steam Turbine"
    generator = f"{g} Generator"
    boiler = f"{g} Boiler"
    report = f"{g} Inspection Report"
    protocol = f"{g} Startup Protocol"
    project = PROJECTS[i % len(PROJECTS)]

    facts = [
        f"{plant} is located in {city}.",
        f"{plant} belongs to {org}.",
        f"{lead} works at {org}.",
        f"{org} employs {lead}.",
        f"{engineer} works for {other_org}.",
        f"{lead} manages {plant} since 2019.",
        f"{engineer} oversees {project} during the expansion phase.",
        f"{pump} is part of {plant}.",
        f"{plant} contains {pump}.",
        f"{pump} feeds {tank} during the night shift.",
        f"{pump} supplies {tank} during the night shift.",
        f"{pump} has a capacity of {400 + 25 * i} liters.",
        f"{valve} is part of {plant}.",
        f"{valve} has a pressure of {10 + i} bar.",
        f"{sensor} monitors {pump} under normal load.",
        f"{sensor} tracks {valve} within the pump hall.",
        f"{boiler} produces steam for {turbine}.",
        f"{turbine} may power {generator} if demand rises.",
        f"{turbine} is part of {plant}.",
        f"{report} describes {protocol}.",
        f"{analyst} works at {org}.",
        f"{protocol} requires {valve} because of the high pressure.",
        f"{project} is based in {city}.",
    ]
    rng.shuffle(facts)
    sentences = []
    for f in facts:
        sentences.append(f)
        for _ in range(rng.randint(2, 3)):
            sentences.append(sentence(rng.choice(FILLER)))
    return " ".join(sentences), facts


def table_doc():
    narrative = (
        "The equipment register for the Harbor Plant lists every rotating machine and its rated values. "
        "Theta Feed Pump is part of Harbor Plant. Theta Flow Sensor monitors Theta Feed Pump under normal load. "
        + " ".join(sentence(f) for f in FILLER)
    )
    table = (
        "Theta Feed Pump has a capacity of 650 liters. Theta Intake Valve has a pressure of 18 bar. "
        "Theta Boiler has a rating of 12 megawatts. Theta Steam Turbine has a speed of 3000 rpm."
    )
    more = " ".join(sentence(f) for f in reversed(FILLER)) + " Ingrid Solberg manages Harbor Plant since 2021."
    return {
        "doc_id": "site_register",
        "segments": [
            {"kind": "narrative", "text": narrative, "provenance": {"page": 1, "region": "p1-body"}},
            {"kind": "table", "text": table, "provenance": {"page": 2, "region": "table-1"}},
            {"kind": "figure", "image_ref": "fig-plant-layout.png", "text": "", "provenance": {"page": 2, "region": "figure-1"}},
            {"kind": "narrative", "text": more, "provenance": {"page": 3, "region": "p3-body"}},
        ],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic")
    ap.add_argument("--docs", type=int, default=12)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    docs = out / "docs"
    docs.mkdir(parents=True, exist_ok=True)
    for old in docs.iterdir():
        old.unlink()

    benchmark = []
    for i in range(args.docs):
        text, facts = site_doc(i, rng)
        (docs / f"site_{i:02d}.txt").write_text(text + "\n")
        if i < 4:
            statements = facts[:8] + [
                f"{ORGS[(i + 2) % len(ORGS)]} is located in {CITIES[(i + 5) % len(CITIES)]}.",
                f"{PEOPLE[(i + 5) % len(PEOPLE)]} manages {GREEK[i]} Storage Tank.",
            ]
            benchmark.append({"article": text, "statements": statements})
    (docs / "site_register.json").write_text(json.dumps(table_doc(), indent=2) + "\n")
    (out / "retention_benchmark.json").write_text(json.dumps(benchmark, indent=2) + "\n")

    ontology = {
        "concepts": ["Agent", "Person", "Organization", "Location", "City", "Facility", "Equipment", "Document", "Method"],
        "relations": [
            {"label": "employedBy", "domain": "Person", "range": "Organization"},
            {"label": "locatedIn", "domain": "Facility", "range": "City"},
            {"label": "partOf", "domain": "Equipment", "range": "Facility"},
            {"label": "manages", "domain": "Person", "range": "Facility"},
            {"label": "documents", "domain": "Document", "range": "Method"},
            {"label": "foundingDate", "domain": "Organization", "range": "xsd:date"},
        ],
    }
    (out / "ontology.json").write_text(json.dumps(ontology, indent=2) + "\n")

    gold = []
    n = 0
    for i in range(args.docs):
        split = "source" if i < args.docs // 2 else "heldout"
        rows = [
            (PEOPLE[i % len(PEOPLE)], "employedBy", ORGS[i % len(ORGS)]),
            (f"{SITES[i]} Plant", "locatedIn", CITIES[i % len(CITIES)]),
            (f"{GREEK[i]} Feed Pump", "partOf", f"{SITES[i]} Plant"),
            (PEOPLE[i % len(PEOPLE)], "manages", f"{SITES[i]} Plant"),
        ]
        if i % 3 == 0:
            rows.append((f"{GREEK[i]} Inspection Report", "documents", f"{GREEK[i]} Startup Protocol"))
        if i % 4 == 0:
            rows.append((ORGS[i % len(ORGS)], "foundingDate", str(1950 + i)))
        for s, r, o in rows:
            n += 1
            gold.append({"sentence_id": f"S{n:04d}", "subject": s, "relation": r, "object": o, "split": split})
    with open(out / "gold_triples.jsonl", "w") as f:
        for g in gold:
            f.write(json.dumps(g, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
