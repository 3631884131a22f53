"""Static inspection output: three orthographic SVG projections or colored PLY."""
import numpy as np

from .dataset import export_ply

RED = (255, 0, 0)
GREY = (110, 110, 110)
PROJECTIONS = (("XY", 0, 1), ("XZ", 0, 2), ("YZ", 1, 2))


def added_point_mask(cloud, reference):
    """True for points of ``cloud`` whose float32 coordinates are not in ``reference``."""
    ref = {tuple(p) for p in np.asarray(reference, dtype=np.float32).tolist()}
    pts = np.asarray(cloud, dtype=np.float32).tolist()
    return np.array([tuple(p) not in ref for p in pts], dtype=bool)


def render_svg(cloud, path, highlight=None, panel=240, radius=1.5):
    """Write XY, XZ and YZ projections side by side, one circle per point per panel."""
    cloud = np.asarray(cloud, dtype=np.float64)
    if highlight is None:
        highlight = np.zeros(cloud.shape[0], dtype=bool)
    extent = float(np.abs(cloud).max()) or 1.0
    half = panel / 2.0
    scale = (half - 8.0) / extent
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{3 * panel}" height="{panel + 20}" '
        f'viewBox="0 0 {3 * panel} {panel + 20}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for j, (title, a, b) in enumerate(PROJECTIONS):
        ox = j * panel + half
        oy = half + 20
        out.append(f'<text x="{ox:.1f}" y="14" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{title}</text>')
        out.append(f'<g id="{title}">')
        for p, hot in zip(cloud, highlight):
            color = "rgb(%d,%d,%d)" % (RED if hot else GREY)
            out.append(f'<circle cx="{ox + p[a] * scale:.2f}" cy="{oy - p[b] * scale:.2f}" '
                       f'r="{radius}" fill="{color}"/>')
        out.append("</g>")
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def render_ply(cloud, path, highlight=None):
    cloud = np.asarray(cloud)
    colors = np.tile(np.array(GREY, dtype=np.uint8), (cloud.shape[0], 1))
    if highlight is not None:
        colors[highlight] = RED
    export_ply(path, cloud, colors)
