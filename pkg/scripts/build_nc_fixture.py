"""Assemble the North Carolina fixture bundle shipped in rps_districts/data/nc.

Geometry comes from the 100-county NC polygon layer distributed with libpysal
(``sids2``).  Polygons are projected to NC State Plane (metres) and reduced to
areas, perimeters and shared border lengths.  Mecklenburg and Wake are cut into
four pieces and Guilford into two with fixed cut polygons; the pieces are laid
out so that each sub-county touches the outside neighbours it has in
``best_plan.csv``.

Requires the ``fixture`` extra (libpysal, pyshp, shapely, pyproj).  Run from the
repository root::

    python scripts/build_nc_fixture.py
"""

import csv
import itertools
import math
from pathlib import Path

import libpysal
import shapefile
from pyproj import Transformer
from shapely import set_precision
from shapely.geometry import Polygon, shape
from shapely.ops import transform

OUT = Path(__file__).resolve().parents[1] / "src" / "rps_districts" / "data" / "nc"

# Percent of 2010 state population per county (two decimals, as published).
# Split parents carry the sum of their sub-county shares.
POP_SHARE = {
    "Alamance": 1.58, "Alexander": 0.39, "Alleghany": 0.12, "Anson": 0.28,
    "Ashe": 0.29, "Avery": 0.19, "Beaufort": 0.50, "Bertie": 0.22,
    "Bladen": 0.37, "Brunswick": 1.13, "Buncombe": 2.50, "Burke": 0.95,
    "Cabarrus": 1.87, "Caldwell": 0.87, "Camden": 0.10, "Carteret": 0.70,
    "Caswell": 0.25, "Catawba": 1.62, "Chatham": 0.67, "Cherokee": 0.29,
    "Chowan": 0.16, "Clay": 0.11, "Cleveland": 1.03, "Columbus": 0.61,
    "Craven": 1.09, "Cumberland": 3.35, "Currituck": 0.25, "Dare": 0.36,
    "Davidson": 1.71, "Davie": 0.43, "Duplin": 0.61, "Durham": 2.81,
    "Edgecombe": 0.59, "Forsyth": 3.68, "Franklin": 0.64, "Gaston": 2.16,
    "Gates": 0.13, "Graham": 0.09, "Granville": 0.63, "Greene": 0.22,
    "Guilford": 5.12, "Halifax": 0.57, "Harnett": 1.20, "Haywood": 0.62,
    "Henderson": 1.12, "Hertford": 0.26, "Hoke": 0.49, "Hyde": 0.06,
    "Iredell": 1.67, "Jackson": 0.42, "Johnston": 1.77, "Jones": 0.11,
    "Lee": 0.61, "Lenoir": 0.62, "Lincoln": 0.82, "Macon": 0.36,
    "Madison": 0.22, "Martin": 0.26, "McDowell": 0.47, "Mecklenburg": 9.64,
    "Mitchell": 0.16, "Montgomery": 0.29, "Moore": 0.93, "Nash": 1.01,
    "New Hanover": 2.13, "Northampton": 0.23, "Onslow": 1.86, "Orange": 1.40,
    "Pamlico": 0.14, "Pasquotank": 0.43, "Pender": 0.55, "Perquimans": 0.14,
    "Person": 0.41, "Pitt": 1.76, "Polk": 0.22, "Randolph": 1.49,
    "Richmond": 0.49, "Robeson": 1.41, "Rockingham": 0.98, "Rowan": 1.45,
    "Rutherford": 0.71, "Sampson": 0.67, "Scotland": 0.38, "Stanly": 0.64,
    "Stokes": 0.50, "Surry": 0.77, "Swain": 0.15, "Transylvania": 0.35,
    "Tyrrell": 0.05, "Union": 2.11, "Vance": 0.48, "Wake": 9.44,
    "Warren": 0.22, "Washington": 0.14, "Watauga": 0.54, "Wayne": 1.29,
    "Wilkes": 0.73, "Wilson": 0.85, "Yadkin": 0.40, "Yancey": 0.19,
}

# Approximate 2016 two-party Democratic share per unsplit county.  These are
# estimates, not certified returns; a common logit shift is applied below so the
# statewide two-party total matches the 2016 U.S. House result.
DEM_SHARE_EST = {
    "Alamance": 0.40, "Alexander": 0.20, "Alleghany": 0.25, "Anson": 0.58,
    "Ashe": 0.27, "Avery": 0.21, "Beaufort": 0.36, "Bertie": 0.62,
    "Bladen": 0.45, "Brunswick": 0.35, "Buncombe": 0.57, "Burke": 0.30,
    "Cabarrus": 0.38, "Caldwell": 0.24, "Camden": 0.28, "Carteret": 0.26,
    "Caswell": 0.42, "Catawba": 0.30, "Chatham": 0.54, "Cherokee": 0.22,
    "Chowan": 0.41, "Clay": 0.23, "Cleveland": 0.33, "Columbus": 0.38,
    "Craven": 0.38, "Cumberland": 0.58, "Currituck": 0.25, "Dare": 0.36,
    "Davidson": 0.26, "Davie": 0.27, "Duplin": 0.40, "Durham": 0.80,
    "Edgecombe": 0.66, "Forsyth": 0.55, "Franklin": 0.44, "Gaston": 0.34,
    "Gates": 0.44, "Graham": 0.20, "Granville": 0.47, "Greene": 0.43,
    "Halifax": 0.63, "Harnett": 0.38, "Haywood": 0.37, "Henderson": 0.35,
    "Hertford": 0.72, "Hoke": 0.53, "Hyde": 0.43, "Iredell": 0.32,
    "Jackson": 0.44, "Johnston": 0.34, "Jones": 0.40, "Lee": 0.43,
    "Lenoir": 0.47, "Lincoln": 0.26, "Macon": 0.30, "Madison": 0.37,
    "Martin": 0.48, "McDowell": 0.26, "Mitchell": 0.22, "Montgomery": 0.35,
    "Moore": 0.35, "Nash": 0.50, "New Hanover": 0.47, "Northampton": 0.67,
    "Onslow": 0.31, "Orange": 0.75, "Pamlico": 0.35, "Pasquotank": 0.48,
    "Pender": 0.36, "Perquimans": 0.34, "Person": 0.40, "Pitt": 0.53,
    "Polk": 0.35, "Randolph": 0.21, "Richmond": 0.45, "Robeson": 0.47,
    "Rockingham": 0.34, "Rowan": 0.30, "Rutherford": 0.26, "Sampson": 0.40,
    "Scotland": 0.52, "Stanly": 0.24, "Stokes": 0.23, "Surry": 0.24,
    "Swain": 0.40, "Transylvania": 0.39, "Tyrrell": 0.41, "Union": 0.35,
    "Vance": 0.64, "Warren": 0.67, "Washington": 0.58, "Watauga": 0.48,
    "Wayne": 0.44, "Wilkes": 0.22, "Wilson": 0.53, "Yadkin": 0.18,
    "Yancey": 0.34,
}

# 2016 U.S. House, North Carolina, statewide two-party totals.
STATE_DEM_2016 = 2_142_661
STATE_REP_2016 = 2_447_326

# Sub-county votes (2016 House, redistributed to the model's sub-counties).
SPLIT_VOTES = {
    "Mecklenburg": [(88_257, 25_917), (73_529, 40_646), (66_745, 47_430), (50_580, 63_595)],
    "Guilford": [(69_143, 55_823), (73_760, 51_206)],
    "Wake": [(75_323, 52_621), (77_867, 48_538), (78_125, 53_606), (65_620, 61_925)],
}

GRID_M = 1.0

# Census county adjacency also lists contacts across open water that a
# land-only outline does not show.
WATER_CONTACTS = {("Carteret", "Pamlico"), ("Dare", "Tyrrell")}


def _poly_km(points):
    return Polygon([(x * 1000.0, y * 1000.0) for x, y in points])


# Cut polygons in State Plane km; sub-county n is parent ∩ CUTS[parent][n-1],
# the last piece takes the remainder.
CUTS = {
    "Mecklenburg": [
        None,  # Mecklenburg 1: centre and west, remainder
        [(432.264, 215.0), (432.264, 196.898), (446.0, 173.0), (480.0, 173.0), (480.0, 215.0)],
        [(400.0, 100.0), (400.0, 166.0), (480.0, 151.0), (480.0, 100.0)],
        [(446.0, 173.0), (480.0, 173.0), (480.0, 151.0), (448.0, 157.0)],
    ],
    "Guilford": [
        [(500.0, 220.0), (539.0, 220.0), (539.0, 290.0), (500.0, 290.0)],
        None,
    ],
    "Wake": [
        [(600.0, 212.0), (636.0, 212.0), (636.0, 238.0), (600.0, 238.0)],
        None,  # Wake 2: east, remainder
        [(600.0, 180.0), (650.0, 180.0), (650.0, 212.0), (600.0, 212.0)],
        [(600.0, 238.0), (700.0, 238.0), (700.0, 270.0), (600.0, 270.0)],
    ],
}


def load_geometry():
    path = libpysal.examples.get_path("sids2.shp")
    reader = shapefile.Reader(path)
    to_m = Transformer.from_crs("EPSG:4267", "EPSG:32119", always_xy=True)
    geoms = {}
    for sr in reader.shapeRecords():
        geom = transform(to_m.transform, shape(sr.shape.__geo_interface__)).buffer(0)
        geoms[sr.record["NAME"]] = set_precision(geom, GRID_M)
    return geoms


def _drop_slivers(geom, min_km2=0.5):
    parts = getattr(geom, "geoms", None)
    if parts is None:
        return geom
    kept = [p for p in parts if p.area / 1e6 >= min_km2]
    return kept[0] if len(kept) == 1 else type(geom)(kept)


def split_geometry(geoms):
    units = {}
    for name in sorted(geoms):
        if name not in CUTS:
            units[name] = geoms[name]
            continue
        parent = geoms[name]
        pieces = {}
        rest = parent
        for k, cut in enumerate(CUTS[name], start=1):
            if cut is not None:
                pieces[k] = set_precision(parent.intersection(_poly_km(cut)), GRID_M)
                rest = rest.difference(_poly_km(cut))
        for k, cut in enumerate(CUTS[name], start=1):
            if cut is None:
                pieces[k] = set_precision(rest, GRID_M)
        for k in sorted(pieces):
            units[f"{name} {k}"] = _drop_slivers(pieces[k])
    return units


def _parent(name, geoms):
    return name if name in geoms else name.rsplit(" ", 1)[0]


def border_km(a, b):
    if not a.buffer(1.0).intersects(b):
        return None
    shared = a.boundary.intersection(b.boundary)
    if shared.is_empty:
        # touching through tiny slivers; treat as a point contact
        shared = a.boundary.intersection(b.buffer(1.0))
        return 0.0 if shared.length < 5.0 else shared.length / 1000.0
    return shared.length / 1000.0


def shifted_dem_share(p, shift):
    logit = math.log(p / (1 - p)) + shift
    return 1 / (1 + math.exp(-logit))


def county_votes():
    split_names = set(SPLIT_VOTES)
    split_dem = sum(d for subs in SPLIT_VOTES.values() for d, _ in subs)
    split_rep = sum(r for subs in SPLIT_VOTES.values() for _, r in subs)
    share_rest = sum(s for n, s in POP_SHARE.items() if n not in split_names)
    votes_rest = (STATE_DEM_2016 + STATE_REP_2016) - split_dem - split_rep
    dem_target = STATE_DEM_2016 - split_dem

    totals = {
        n: votes_rest * s / share_rest for n, s in POP_SHARE.items() if n not in split_names
    }

    def dem_total(shift):
        return sum(t * shifted_dem_share(DEM_SHARE_EST[n], shift) for n, t in totals.items())

    lo, hi = -2.0, 2.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if dem_total(mid) < dem_target:
            lo = mid
        else:
            hi = mid
    shift = (lo + hi) / 2
    out = {}
    for n, t in totals.items():
        dem = round(t * shifted_dem_share(DEM_SHARE_EST[n], shift))
        out[n] = (dem, round(t) - dem)
    return out


def main():
    geoms = load_geometry()
    assert set(geoms) == set(POP_SHARE), set(geoms) ^ set(POP_SHARE)
    units = split_geometry(geoms)
    votes = county_votes()
    OUT.mkdir(parents=True, exist_ok=True)

    with open(OUT / "counties.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "name", "pop_share", "population", "dem_votes", "rep_votes",
                    "area_km2", "perimeter_km"])
        for i, name in enumerate(sorted(geoms), start=1):
            g = geoms[name]
            dem, rep = votes.get(name, ("", ""))
            if name in SPLIT_VOTES:
                dem = sum(d for d, _ in SPLIT_VOTES[name])
                rep = sum(r for _, r in SPLIT_VOTES[name])
            w.writerow([i, name, f"{POP_SHARE[name]:.2f}", "", dem, rep,
                        f"{g.area / 1e6:.3f}", f"{g.length / 1e3:.3f}"])

    with open(OUT / "splits.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parent", "sub_name", "dem_votes", "rep_votes", "area_km2", "perimeter_km"])
        for parent in sorted(SPLIT_VOTES):
            for k, (dem, rep) in enumerate(SPLIT_VOTES[parent], start=1):
                g = units[f"{parent} {k}"]
                w.writerow([parent, f"{parent} {k}", dem, rep,
                            f"{g.area / 1e6:.3f}", f"{g.length / 1e3:.3f}"])

    with open(OUT / "adjacency.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name_a", "name_b", "border_km", "algo_adjacent"])
        for a, b in itertools.combinations(sorted(units), 2):
            length = border_km(units[a], units[b])
            if length is None:
                if (a, b) not in WATER_CONTACTS:
                    continue
                length = 0.0
            if length == 0.0 and (a not in geoms or b not in geoms):
                # point contacts created by the cut lines are not borders;
                # keep only those inherited from a point-contact parent pair
                pa, pb = _parent(a, geoms), _parent(b, geoms)
                if pa == pb or border_km(geoms[pa], geoms[pb]) != 0.0:
                    continue
            # every census contact is algorithmically adjacent; weak borders
            # are removed through overrides.csv at load time
            w.writerow([a, b, f"{length:.3f}", 1])


if __name__ == "__main__":
    main()
