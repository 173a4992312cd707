"""Summary document over finished runs: one table per claim family, with the
target rate, the measured exponent, fit window, constant, and verdict."""

import glob
import json
import os

# claim families: kind -> (table title, target description, exponent extractor)
_FAMILIES = {
    "linear-decay": ("Free-evolution dispersive decay", "Linf ~ t^-1.5, L6 ~ t^-1.0"),
    "nonlinear-decay": ("Nonlinear sup-norm decay", "Linf ~ t^-1.5 with bounded envelope"),
    "l6-decay": ("Weighted L6 decay", "L6 ~ t^-1.0 for finite-variance data"),
    "pc-energy": ("Monotone pseudo-conformal quantity", "V nonincreasing; dV/dt identity"),
    "scattering-rate": ("Convergence to the free profile", "Hdot^1/2 distance ~ t^-2"),
    "spacetime-tail": ("Spacetime L5 tail", "tail ~ s^-0.7"),
    "duhamel": ("Duhamel reconstruction", "2nd-order residual; window-split invariance"),
    "morawetz": ("Interaction-Morawetz accumulation", "L4_t,x^4 bounded by mass x H^1/2 sup"),
    "ensemble": ("Randomized-data ensemble", "small exceptional tails"),
    "amplitude-sweep": ("Amplitude trend", "constant growth reported, no pass/fail"),
    "convergence-gate": ("Integrator order", "Richardson ratio ~ 4"),
}


def _measured(manifest):
    fits = manifest.get("fits", {})
    out = []
    for key in ("linf", "l6", "unl_linf"):
        entry = fits.get(key)
        if isinstance(entry, dict) and "exponent" in entry:
            out.append(
                (key, entry["exponent"], entry.get("window"), entry.get("log_constant"))
            )
    sc = manifest.get("scattering")
    if sc and isinstance(sc.get("rate_fit"), dict):
        f = sc["rate_fit"]
        out.append(("rate", f["exponent"], f.get("window"), f.get("log_constant")))
    tail = manifest.get("tail")
    if tail and isinstance(tail.get("fit"), dict):
        f = tail["fit"]
        out.append(("tail", f["exponent"], f.get("window"), f.get("log_constant")))
    if "richardson_ratio" in manifest:
        out.append(("ratio", manifest["richardson_ratio"], None, None))
    return out


def build_report(run_globs) -> str:
    manifests = []
    missing = []
    for pattern in run_globs:
        hits = sorted(glob.glob(pattern))
        if not hits:
            missing.append(pattern)
        for hit in hits:
            path = hit if hit.endswith("manifest.json") else os.path.join(hit, "manifest.json")
            if not os.path.exists(path):
                missing.append(hit)
                continue
            with open(path, "r", encoding="utf-8") as f:
                manifests.append(json.load(f))

    lines = ["# nlslab run report", ""]
    if missing:
        lines += ["Missing runs (skipped):", ""]
        lines += [f"- {m}" for m in missing]
        lines.append("")
    by_kind = {}
    for m in manifests:
        by_kind.setdefault(m["kind"], []).append(m)
    for kind, (title, target) in _FAMILIES.items():
        runs = by_kind.get(kind)
        if not runs:
            continue
        lines += [f"## {title}", "", f"Target: {target}", ""]
        lines.append("| run | measured | window | log-constant | verdicts | status |")
        lines.append("|---|---|---|---|---|---|")
        for m in sorted(runs, key=lambda r: r["run_id"]):
            measured = _measured(m)
            mtxt = (
                "; ".join(
                    f"{name}={value:.4g}" for name, value, _, _ in measured
                )
                or "-"
            )
            wins = {w and tuple(round(x, 4) for x in w) for _, _, w, _ in measured}
            wtxt = "; ".join(str(w) for w in wins if w) or "-"
            ctxt = (
                "; ".join(
                    f"{c:.4g}" for _, _, _, c in measured if c is not None
                )
                or "-"
            )
            vtxt = (
                ", ".join(
                    f"{v['name']}:{'pass' if v['passed'] else 'FAIL'}"
                    for v in m["verdicts"]
                )
                or "-"
            )
            lines.append(
                f"| {m['run_id']} | {mtxt} | {wtxt} | {ctxt} | {vtxt} | {m['status']} |"
            )
        lines.append("")
    if not manifests:
        lines += ["No runs found.", ""]
    return "\n".join(lines)
