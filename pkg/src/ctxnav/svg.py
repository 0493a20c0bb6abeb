"""Top-down SVG plot of a run: world, people, artworks and the robot path."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Sequence

from .context import ContextLabel
from .sim import TickRecord
from .world import PERSON_RADIUS, Scenario

CONTEXT_COLORS = {
    ContextLabel.Hallway: "#1f77b4",
    ContextLabel.ArtGallery: "#9467bd",
    ContextLabel.VendingMachine: "#8c564b",
    ContextLabel.Other: "#7f7f7f",
    ContextLabel.Queue: "#ff7f0e",
    ContextLabel.OFormation: "#2ca02c",
}
REGION_FILL = {
    "hallway": "#dbe9f6",
    "art_gallery": "#ece3f4",
    "vending_machine": "#f1e4dc",
    "other": "#f2f2f2",
}


def _f(v: float) -> str:
    return f"{v:.4g}"


def _pts(xy) -> str:
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in xy)


def render_svg(scenario: Scenario, records: Sequence[TickRecord], scale: float = 60.0) -> str:
    """SVG document; world y points up, so the drawing group flips the axis.

    The run contributes exactly one ``<path>`` (the full robot track) plus a
    polyline per context segment for colouring; every person and artwork
    gets one marker element.
    """
    xmin, ymin, xmax, ymax = scenario.bounds
    w, h = xmax - xmin, ymax - ymin
    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": _f(w * scale), "height": _f(h * scale),
        "viewBox": f"{_f(xmin)} {_f(-ymax)} {_f(w)} {_f(h)}",
    })
    ET.SubElement(svg, "title").text = scenario.name or "run"
    g = ET.SubElement(svg, "g", {"transform": "scale(1,-1)", "stroke-width": "0.03"})

    layer = ET.SubElement(g, "g", {"class": "regions"})
    for region in scenario.regions:
        ET.SubElement(layer, "polygon", {
            "class": f"region {region.label}", "points": _pts((p.x, p.y) for p in region.polygon),
            "fill": REGION_FILL[region.label], "stroke": "none",
        })

    layer = ET.SubElement(g, "g", {"class": "obstacles"})
    for b in scenario.boxes:
        ET.SubElement(layer, "rect", {
            "x": _f(b.xmin), "y": _f(b.ymin), "width": _f(b.xmax - b.xmin), "height": _f(b.ymax - b.ymin),
            "fill": "#444444",
        })
    for wall in scenario.walls:
        ET.SubElement(layer, "line", {
            "x1": _f(wall.x0), "y1": _f(wall.y0), "x2": _f(wall.x1), "y2": _f(wall.y1),
            "stroke": "#222222", "stroke-width": "0.06",
        })

    t_end = len(records) * 0.1 if records else 0.0
    layer = ET.SubElement(g, "g", {"class": "markers"})
    for person in scenario.persons_at(t_end):
        ET.SubElement(layer, "circle", {
            "class": "marker person", "cx": _f(person.x), "cy": _f(person.y), "r": _f(PERSON_RADIUS),
            "fill": "#d62728",
        })
    for art in scenario.artworks:
        ET.SubElement(layer, "rect", {
            "class": "marker artwork", "x": _f(art.x - 0.15), "y": _f(art.y - 0.15),
            "width": "0.3", "height": "0.3", "fill": "#bcbd22",
        })

    track = [(scenario.robot_start.x, scenario.robot_start.y)] + [(r.robot.x, r.robot.y) for r in records]
    run = ET.SubElement(g, "g", {"class": "run"})
    d = "M " + " L ".join(f"{_f(x)} {_f(y)}" for x, y in track)
    ET.SubElement(run, "path", {"class": "robot-path", "d": d, "fill": "none", "stroke": "#000000",
                                "stroke-width": "0.02", "stroke-dasharray": "0.05 0.05"})
    start = 0
    for i in range(1, len(records) + 1):
        if i == len(records) or records[i].context is not records[start].context:
            seg = track[start:i + 1]
            ET.SubElement(run, "polyline", {
                "class": f"context {records[start].context.value}", "points": _pts(seg),
                "fill": "none", "stroke": CONTEXT_COLORS[records[start].context], "stroke-width": "0.06",
            })
            start = i

    goals = [r.social_goal for r in records if r.social_goal is not None]
    if goals:
        goal = goals[-1].pose
        ET.SubElement(run, "circle", {"class": "social-goal", "cx": _f(goal.x), "cy": _f(goal.y), "r": "0.12",
                                      "fill": "none", "stroke": "#17becf", "stroke-width": "0.05"})
    ET.SubElement(run, "circle", {"class": "goal", "cx": _f(scenario.robot_goal.x), "cy": _f(scenario.robot_goal.y),
                                  "r": "0.08", "fill": "#000000"})
    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode", xml_declaration=False) + "\n"
