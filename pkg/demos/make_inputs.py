"""
Regenerate the sample input files under data/
=============================================

Everything the command-line examples read is derived from code in this
package, so the data directory can always be rebuilt from scratch:

  * example_cell.building             intact test cell
  * example_cell_door_defect.building same cell with the door defect
  * example_weather.csv               five days of synthetic weather
  * example_measurements.csv          pseudo-measurements from the intact cell

Run from the repository root: python3 demos/make_inputs.py
"""

import os

from thermodiag import (
    DefectSpec,
    build_mesh,
    default_measured_nodes,
    example_cell,
    generate_pseudo_measurements,
    inject_defect,
    synthetic_weather,
)
from thermodiag.cli import measurements_csv, weather_csv, write_building

OUT = "data"
os.makedirs(OUT, exist_ok=True)


def put(name: str, text: str) -> None:
    path = os.path.join(OUT, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(f"wrote {path}")


reference = example_cell()
damaged = inject_defect(reference, DefectSpec(
    "door", "layer_conductivity", base=0.23, perturbed=0.78,
    component="door"))

put("example_cell.building", write_building(reference))
put("example_cell_door_defect.building", write_building(damaged))

weather = synthetic_weather(days=5)
put("example_weather.csv", weather_csv(weather))

model = build_mesh(reference)
meas = generate_pseudo_measurements(
    reference, weather, default_measured_nodes(model))
put("example_measurements.csv", measurements_csv(meas))
