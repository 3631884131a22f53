"""Matplotlib figures for metric reports (radar chart plus per-corruption bars)."""
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.linewidth": 0.8,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "svg.hashsalt": "pccorrupt",
    "savefig.dpi": 150,
}


def report_figure(reports, path):
    """Save a radar chart of each report's radar series and a CE bar chart.

    ``reports`` is a list of :class:`~pccorrupt.metrics.MetricsReport`. The
    radar axis is 1/CE (or OA, per each report's ``radar_mode``); bars show
    CE per corruption with the baseline level (1.0) marked.
    """
    with plt.rc_context(RC):
        fig = plt.figure(figsize=(9.0, 4.0))
        radar = fig.add_subplot(1, 2, 1, projection="polar")
        bars = fig.add_subplot(1, 2, 2)
        labels = [name for name, _ in reports[0].radar()]
        angles = [2 * math.pi * i / len(labels) for i in range(len(labels))]
        width = 0.8 / len(reports)
        for j, rep in enumerate(reports):
            values = [0.0 if v is None else v for _, v in rep.radar()]
            radar.plot(angles + angles[:1], values + values[:1], lw=1.2, label=rep.method)
            radar.fill(angles + angles[:1], values + values[:1], alpha=0.15)
            ces = [rep.ce[k] for k in rep.ce]
            xs = [i + (j - (len(reports) - 1) / 2) * width for i in range(len(ces))]
            bars.bar(xs, ces, width=width, label=f"{rep.method} (mCE {rep.mce:.3f})")
        radar.set_xticks(angles)
        radar.set_xticklabels(labels)
        mode = reports[0].radar_mode
        radar.set_title("1 / CE" if mode == "inv_ce" else "OA", pad=14)
        bars.axhline(1.0, color="0.3", lw=0.8, ls="--")
        bars.set_xticks(range(len(labels)))
        bars.set_xticklabels(labels, rotation=30)
        bars.set_ylabel(f"CE (baseline {reports[0].baseline} = 1)")
        bars.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata=_metadata(path))
        plt.close(fig)
    return path


def _metadata(path):
    # strip timestamps so figures are reproducible byte-for-byte where the backend allows
    suffix = str(path).rsplit(".", 1)[-1].lower()
    if suffix == "png":
        return {"Software": None}
    if suffix == "svg":
        return {"Date": None}
    if suffix == "pdf":
        return {"CreationDate": None, "ModDate": None}
    return None
