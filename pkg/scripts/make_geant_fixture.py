"""Write the Geant-like fixture shipped in src/mptpt/data/geant.json.

41 national PoPs with a hand-drawn pan-European backbone; PMs sit on the nine
switches of highest degree (ties broken by node order). Every link and PM
has capacity 500.
"""
import json
from pathlib import Path

ADJ = """
uk: ie is nl fr be
nl: be de dk
be: lu fr
lu: de
fr: ch es de
es: pt it
ch: it de at
it: mt gr de at
de: dk pl cz at ru
dk: is no se
no: se
se: fi ee
fi: ee ru
ee: lv
lv: lt
lt: pl
pl: cz ua by
cz: sk
sk: at hu
at: si hu
si: hr
hr: hu rs
hu: ro rs
ro: bg md
bg: gr tr mk
gr: cy
cy: il
tr: ge
rs: me mk
ua: md
ru: ge
"""
ORDER = (
    "uk ie is nl be lu fr es pt ch it mt de dk no se fi ee lv lt pl cz sk at si "
    "hr hu ro bg gr cy tr il rs me mk ua md by ru ge"
).split()


def main(out=Path(__file__).resolve().parents[1] / "src/mptpt/data/geant.json"):
    links = []
    for line in ADJ.strip().splitlines():
        u, rest = line.split(":")
        links += [(u.strip(), v) for v in rest.split()]
    assert len(ORDER) == 41 and len(set(ORDER)) == 41
    assert {x for e in links for x in e} == set(ORDER)
    deg = {v: 0 for v in ORDER}
    for u, v in links:
        deg[u] += 1
        deg[v] += 1
    hubs = sorted(ORDER, key=lambda v: (-deg[v], ORDER.index(v)))[:9]
    doc = {
        "name": "geant",
        "description": "Geant-like backbone: 41 switches, 9 PMs on highest-degree switches",
        "nodes": [{"id": v, "kind": "switch"} for v in ORDER]
        + [{"id": f"pm_{v}", "kind": "pm", "capacity": 500.0} for v in hubs],
        "links": [{"from": u, "to": v, "capacity": 500.0, "bidirectional": True} for u, v in links]
        + [{"from": v, "to": f"pm_{v}", "capacity": 500.0, "bidirectional": True} for v in hubs],
        "classes": [],
    }
    out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"{len(links)} switch links, hubs={hubs}")


if __name__ == "__main__":
    main()
