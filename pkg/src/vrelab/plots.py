"""SVG figures drawn from a sweep directory written by :mod:`vrelab.report`.

Output is byte-reproducible: text is rendered as paths, element ids use a
fixed hash salt and no date is embedded.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import read_column, read_sweep, read_table  # noqa: E402

FIGURE_KINDS = ("rldc", "pdc", "dispatch-rldc", "market-values", "deltas")

_RC = {"svg.hashsalt": "vrelab", "svg.fonttype": "path", "font.size": 9,
       "axes.grid": True, "grid.alpha": 0.3}


class PlotInputError(FileNotFoundError):
    pass


def _need(path: Path) -> Path:
    if not path.is_file():
        raise PlotInputError(f"missing input file {path}")
    return path


def _ok_points(sweep: dict) -> list[tuple[str, Path]]:
    out = [(str(row["label"]), pdir) for row, pdir in _ok_rows(sweep)]
    if not out:
        raise PlotInputError("sweep has no successfully solved points")
    return out


def _ok_rows(sweep: dict) -> list[tuple[dict, Path]]:
    return [(row, pdir) for row, pdir in zip(sweep["aggregate"], sweep["points"])
            if row["status"] == "ok"]


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_rldc(sweep_dir, out: Path):
    sweep = read_sweep(sweep_dir)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.5, 4))
        for label, pdir in _ok_points(sweep):
            ax.plot(read_column(_need(pdir / "rldc.csv"), "residual_load_mw") / 1e3,
                    label=label, lw=1.2)
        ax.axhline(0, color="k", lw=0.6)
        ax.set_xlabel("hours of the year, sorted [h]")
        ax.set_ylabel("residual load [GW]")
        ax.set_title("Residual load duration curves")
        ax.legend()
        return _save(fig, out)


def plot_pdc(sweep_dir, out: Path, cap_quantile: float = 0.99):
    """Price duration curves; the y axis is capped at ``cap_quantile`` of all prices."""
    sweep = read_sweep(sweep_dir)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.5, 4))
        every = []
        _ok_points(sweep)
        for row, pdir in _ok_rows(sweep):
            label = str(row["label"])
            prices = read_column(_need(pdir / "pdc.csv"), "price_eur_mwh")
            every.append(prices)
            line, = ax.plot(prices, label=label, lw=1.2)
            ax.axhline(row["base_price_eur_mwh"], color=line.get_color(), lw=0.8, ls=":")
        allp = np.concatenate(every)
        top = float(np.quantile(allp, cap_quantile))
        low = float(allp.min())
        ax.set_ylim(min(low, 0) - 5, top + 5)
        ax.axhline(0, color="k", lw=0.6)
        ax.set_xlabel("hours of the year, sorted [h]")
        ax.set_ylabel("price [EUR/MWh]")
        ax.set_title(f"Price duration curves (capped at {cap_quantile:.0%} quantile; "
                     "dotted: demand-weighted mean)")
        ax.legend()
        return _save(fig, out)


def plot_dispatch_rldc(sweep_dir, out: Path):
    """Residual load duration curve with storage net discharge in the same hour order."""
    sweep = read_sweep(sweep_dir)
    points = _ok_points(sweep)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(points), 1, figsize=(6.5, 2.2 * len(points)),
                                 sharex=True, squeeze=False)
        for ax, (label, pdir) in zip(axes[:, 0], points):
            _, rl_rows = read_table(_need(pdir / "rldc.csv"))
            order = np.array([r["hour"] for r in rl_rows], dtype=int)
            rl = np.array([r["residual_load_mw"] for r in rl_rows])
            header, disp = read_table(_need(pdir / "dispatch.csv"))
            ax.plot(rl / 1e3, color="0.3", lw=1.0, label="residual load")
            if "discharge_mw" in header:
                net = np.array([r["discharge_mw"] - r["charge_mw"] for r in disp])[order]
                ax.fill_between(np.arange(net.size), net / 1e3, color="tab:green", lw=0,
                                alpha=0.7, label="storage discharge - charge")
            ax.axhline(0, color="k", lw=0.5)
            ax.set_ylabel("GW")
            ax.set_title(label, loc="left")
        axes[0, 0].legend(loc="upper right")
        axes[-1, 0].set_xlabel("hours sorted by residual load [h]")
        fig.tight_layout()
        return _save(fig, out)


def _vre_techs(header) -> list[str]:
    return [h[3:] for h in header if h.startswith("mv_")]


def plot_market_values(sweep_dir, out: Path, pair_dir=None):
    sweep = read_sweep(sweep_dir)
    pair = read_sweep(pair_dir) if pair_dir is not None else None
    rows = [r for r in sweep["aggregate"] if r["status"] == "ok"]
    x = np.array([r["value"] for r in rows])
    scale = 100.0 if sweep["manifest"]["driver"] == "vre_share" else 1.0
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.5, 4))
        for tech in _vre_techs(sweep["header"]):
            mv = np.array([r[f"mv_{tech}"] for r in rows])
            lc = np.array([r[f"lcoe_{tech}"] for r in rows])
            line, = ax.plot(x * scale, mv, marker="o", label=f"market value {tech}")
            ax.plot(x * scale, lc, marker="s", ls="--", color=line.get_color(),
                    label=f"LCOE {tech}")
            if pair is not None:
                prow = [r for r in pair["aggregate"] if r["status"] == "ok"]
                px = np.array([r["value"] for r in prow])
                ax.plot(px * scale, [r[f"mv_{tech}"] for r in prow], marker="o", ls=":",
                        color=line.get_color(), alpha=0.6,
                        label=f"market value {tech} (no storage)")
        ax.set_xlabel("VRE share [%]" if scale == 100.0 else "CO2 price [EUR/t]")
        ax.set_ylabel("EUR/MWh")
        ax.set_title("Market values and LCOE of VRE")
        ax.legend(fontsize=7)
        return _save(fig, out)


def plot_deltas(sweep_dir, out: Path, pair_dir=None):
    """With-storage minus without-storage curves and values; needs ``pair_dir``."""
    if pair_dir is None:
        raise PlotInputError(f"deltas plot needs the paired no-storage sweep of {sweep_dir} "
                             "(missing --pair DIR)")
    pair_dir = Path(pair_dir)
    if not (pair_dir / "manifest.json").is_file():
        raise PlotInputError(f"paired no-storage sweep not found: {pair_dir}/manifest.json")
    a = read_sweep(sweep_dir)
    b = read_sweep(pair_dir)
    if a["manifest"]["values"] != b["manifest"]["values"]:
        raise PlotInputError("paired sweeps have different grids")
    pa, pb = _ok_points(a), _ok_points(b)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 2, figsize=(8, 6))
        for (label, da), (_, db) in zip(pa, pb):
            for ax, fname, col, unit in ((axes[0, 0], "rldc.csv", "residual_load_mw", 1e3),
                                         (axes[0, 1], "pdc.csv", "price_eur_mwh", 1.0)):
                ya = read_column(_need(da / fname), col)
                yb = read_column(_need(db / fname), col)
                ax.plot((ya - yb) / unit, label=label, lw=1.0)
        ra = [r for r in a["aggregate"] if r["status"] == "ok"]
        rb = {r["label"]: r for r in b["aggregate"] if r["status"] == "ok"}
        for tech in _vre_techs(a["header"]):
            xs, dmv, dlc = [], [], []
            for r in ra:
                if r["label"] in rb:
                    xs.append(r["value"])
                    dmv.append(r[f"mv_{tech}"] - rb[r["label"]][f"mv_{tech}"])
                    dlc.append(r[f"lcoe_{tech}"] - rb[r["label"]][f"lcoe_{tech}"])
            axes[1, 0].plot(xs, dmv, marker="o", label=tech)
            axes[1, 1].plot(xs, dlc, marker="o", label=tech)
        axes[0, 0].set_ylabel("change in residual load [GW]")
        axes[0, 1].set_ylabel("change in price [EUR/MWh]")
        axes[1, 0].set_ylabel("change in market value [EUR/MWh]")
        axes[1, 1].set_ylabel("change in LCOE [EUR/MWh]")
        for ax in axes[0]:
            ax.set_xlabel("hours, sorted [h]")
        for ax in axes[1]:
            ax.set_xlabel("driver value")
        for ax in axes.ravel():
            ax.legend(fontsize=7)
        fig.suptitle("Differences to a setting without storage")
        fig.tight_layout()
        return _save(fig, out)


def plot(sweep_dir, kind: str, out_dir=None, *, pair_dir=None, cap_quantile: float = 0.99) -> Path:
    sweep_dir = Path(sweep_dir)
    out_dir = Path(out_dir) if out_dir is not None else sweep_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{kind}.svg"
    if kind == "rldc":
        return plot_rldc(sweep_dir, out)
    if kind == "pdc":
        return plot_pdc(sweep_dir, out, cap_quantile)
    if kind == "dispatch-rldc":
        return plot_dispatch_rldc(sweep_dir, out)
    if kind == "market-values":
        return plot_market_values(sweep_dir, out, pair_dir)
    if kind == "deltas":
        return plot_deltas(sweep_dir, out, pair_dir)
    raise ValueError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
