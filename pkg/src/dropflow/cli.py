"""Command-line runner: configuration parsing, run orchestration, file output.

Subcommands: ``evolve`` (time-step a droplet and emit frames + metrics),
``minimize`` (a single step, or the constrained capillary minimizer),
``oracle-compare`` (exhaustive ground truth vs both solvers on a tiny grid),
``analyze`` (recompute diagnostics from stored frames).

Configuration is a flat key = value text file with dotted section names;
values given on the command line as extra ``key=value`` arguments override
the file.  Exit codes: 0 success, 2 invalid configuration (diagnostic names
the offending key), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import analysis, energy, flow, mincut, oracle, relax, serialize
from .grid import BetaField, HalfSpaceGrid, SetMask, box_mask, cap_mask, make_grid

__all__ = ["main", "ConfigError", "parse_config", "RunConfig"]


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip() != ""]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip() != ""]


class RunConfig:
    """Validated run configuration: grid, contact field, initial set, flow."""

    def __init__(self, kv: dict[str, str], base_dir: Path):
        self.kv = kv
        self.base_dir = base_dir
        self.units = kv.get("units", "absolute")
        if self.units not in ("absolute", "cells"):
            raise ConfigError("units", f"must be 'absolute' or 'cells', got {self.units!r}")
        self.grid = self._build_grid()
        self.beta = self._build_beta()
        self.initial = self._build_initial()
        self.stencil = self._build_stencil()
        self.output_dir = base_dir / kv.get("output.dir", "out")
        try:
            self.cadence = int(kv.get("output.cadence", "1"))
        except ValueError as e:
            raise ConfigError("output.cadence", str(e))
        if self.cadence < 1:
            raise ConfigError("output.cadence", "must be >= 1")
        self.analysis_enabled = kv.get("analysis.enabled", "true").lower() in ("1", "true", "yes")

    def _length(self, key: str, value: float) -> float:
        return value * self.grid.h if self.units == "cells" else value

    def _build_grid(self) -> HalfSpaceGrid:
        kv = self.kv
        try:
            d = int(kv.get("grid.d", "2"))
        except ValueError as e:
            raise ConfigError("grid.d", str(e))
        if "grid.h" not in kv:
            raise ConfigError("grid.h", "missing cell spacing")
        try:
            h = float(kv["grid.h"])
        except ValueError as e:
            raise ConfigError("grid.h", str(e))
        if "grid.extents" in kv:
            try:
                extents = _ints(kv["grid.extents"])
            except ValueError as e:
                raise ConfigError("grid.extents", str(e))
        else:
            extents = self._auto_extents(d, h)
        try:
            return make_grid(d, extents, h)
        except ValueError as e:
            raise ConfigError("grid", str(e))

    def _auto_extents(self, d: int, h: float) -> list[int]:
        kv = self.kv
        kind = kv.get("init.kind")
        scale = h if kv.get("units", "absolute") == "cells" else 1.0
        if kind == "cap":
            center = [c * scale for c in _floats(kv.get("init.center", ""))]
            radius = float(kv.get("init.radius", "0")) * scale
            if not center or radius <= 0:
                raise ConfigError("grid.extents", "cannot auto-size without init.center/init.radius")
            hi = [c + radius for c in center[: d - 1]] + [radius]
        elif kind == "box":
            hi = [c * scale for c in _floats(kv.get("init.hi", ""))]
            if len(hi) != d:
                raise ConfigError("grid.extents", "cannot auto-size without init.hi")
        else:
            raise ConfigError("grid.extents", "required for mask-file initialization")
        ext = []
        for axis, top in enumerate(hi):
            cells = int(np.ceil(top / h))
            pad = max(8, int(np.ceil(0.25 * cells)))
            ext.append(cells + pad)
        return ext

    def _build_beta(self) -> BetaField:
        kv = self.kv
        try:
            kappa = float(kv.get("beta.kappa", "0.25"))
        except ValueError as e:
            raise ConfigError("beta.kappa", str(e))
        has_value = "beta.value" in kv
        has_csv = "beta.csv" in kv
        if has_value == has_csv:
            raise ConfigError("beta", "give exactly one of beta.value and beta.csv")
        cols = self.grid.extents[:-1]
        if has_value:
            try:
                value = float(kv["beta.value"])
            except ValueError as e:
                raise ConfigError("beta.value", str(e))
            values = np.full(cols, value)
        else:
            path = self.base_dir / kv["beta.csv"]
            if not path.exists():
                raise ConfigError("beta.csv", f"file not found: {path}")
            values = np.loadtxt(path, delimiter=",").reshape(cols)
        try:
            return BetaField(self.grid, values, kappa)
        except ValueError as e:
            raise ConfigError("beta", str(e))

    def _build_initial(self) -> SetMask:
        kv = self.kv
        kind = kv.get("init.kind")
        if kind is None:
            raise ConfigError("init.kind", "missing (cap | box | mask-file)")
        sources = [k for k in ("init.radius", "init.hi", "init.path") if k in kv]
        if kind == "cap":
            if "init.path" in kv or "init.hi" in kv:
                raise ConfigError("init", "cap initialization takes only center and radius")
            try:
                center = [self._length("init.center", c) for c in _floats(kv["init.center"])]
                radius = self._length("init.radius", float(kv["init.radius"]))
            except KeyError as e:
                raise ConfigError(str(e.args[0]), "missing")
            except ValueError as e:
                raise ConfigError("init", str(e))
            try:
                return cap_mask(self.grid, center, radius)
            except ValueError as e:
                raise ConfigError("init", str(e))
        if kind == "box":
            try:
                lo = [self._length("init.lo", c) for c in _floats(kv["init.lo"])]
                hi = [self._length("init.hi", c) for c in _floats(kv["init.hi"])]
            except KeyError as e:
                raise ConfigError(str(e.args[0]), "missing")
            except ValueError as e:
                raise ConfigError("init", str(e))
            try:
                return box_mask(self.grid, lo, hi)
            except ValueError as e:
                raise ConfigError("init", str(e))
        if kind == "mask-file":
            if "init.path" not in kv:
                raise ConfigError("init.path", "missing")
            paths = sorted(self.base_dir.glob(kv["init.path"]))
            if not paths:
                single = self.base_dir / kv["init.path"]
                if not single.exists():
                    raise ConfigError("init.path", f"no file matches {kv['init.path']!r}")
                paths = [single]
            try:
                mask = serialize.load_mask_pgm(paths)
            except (ValueError, OSError) as e:
                raise ConfigError("init.path", str(e))
            if mask.grid != self.grid:
                raise ConfigError(
                    "init.path",
                    f"mask grid {mask.grid.extents} h={mask.grid.h} does not match "
                    f"configured grid {self.grid.extents} h={self.grid.h}",
                )
            return mask
        raise ConfigError("init.kind", f"unknown kind {kind!r}")

    def _build_stencil(self) -> energy.Stencil:
        name = self.kv.get("flow.stencil", "cc16" if self.grid.d == 2 else "cc")
        if name == "axis":
            return energy.Stencil.axis(self.grid)
        if name == "cc":
            return energy.Stencil.cauchy_crofton(self.grid, 1)
        if name == "cc16":
            if self.grid.d != 2:
                raise ConfigError("flow.stencil", "cc16 is 2D-only")
            return energy.Stencil.cauchy_crofton(self.grid, 2)
        raise ConfigError("flow.stencil", f"unknown stencil {name!r}")

    def flow_config(self) -> flow.FlowConfig:
        kv = self.kv
        has_lam = "flow.lambda" in kv
        has_dt = "flow.dt" in kv
        if has_lam == has_dt:
            raise ConfigError("flow", "give exactly one of flow.lambda and flow.dt")
        try:
            lam = float(kv["flow.lambda"]) if has_lam else None
            dt = float(kv["flow.dt"]) if has_dt else None
            steps = int(kv.get("flow.steps", "1"))
        except ValueError as e:
            raise ConfigError("flow", str(e))
        try:
            return flow.FlowConfig(
                initial=self.initial,
                beta=self.beta,
                steps=steps,
                lam=lam,
                dt=dt,
                solver=kv.get("flow.solver", "mincut"),
                selection=kv.get("flow.selection", "minimal"),
                stencil=self.stencil,
                relax_tol=float(kv.get("flow.relax_tol", "1e-8")),
                relax_max_iter=int(kv.get("flow.relax_max_iter", "200000")),
                cadence=self.cadence,
            )
        except ValueError as e:
            raise ConfigError("flow", str(e))

    def analysis_kwargs(self) -> dict:
        kv = self.kv
        out = {}
        if "analysis.b_n" in kv:
            out["b_n"] = float(kv["analysis.b_n"])
        if "analysis.c_iso" in kv:
            out["c_iso"] = float(kv["analysis.c_iso"])
        if "analysis.window" in kv:
            out["contact_window"] = self._length(
                "analysis.window", float(kv["analysis.window"])
            )
        return out


def _load_run_config(args) -> RunConfig:
    path = Path(args.config)
    text = path.read_text()  # OSError propagates to main's handler (exit 3)
    kv = parse_config(text)
    for ov in args.overrides:
        if "=" not in ov:
            raise ConfigError("override", f"expected key=value, got {ov!r}")
        k, v = ov.split("=", 1)
        kv[k.strip()] = v.strip()
    return RunConfig(kv, path.parent)


def _cmd_evolve(args) -> int:
    rc = _load_run_config(args)
    cfg = rc.flow_config()
    _warn_domain_size(rc)
    traj = flow.evolve(cfg)
    rc.output_dir.mkdir(parents=True, exist_ok=True)
    try:
        for m in traj.metrics:
            if m.k % rc.cadence == 0 or m.k == len(traj.masks) - 1:
                serialize.save_mask_pgm(
                    traj.masks[m.k], rc.output_dir / f"frame_{m.k:05d}.pgm"
                )
        serialize.save_metrics_csv(traj, rc.output_dir / "metrics.csv")
        if rc.analysis_enabled:
            rec = analysis.run_report(
                traj, rc.beta.kappa, rc.beta, **rc.analysis_kwargs()
            )
            serialize.save_json(rec, rc.output_dir / "analysis.json")
            _write_sample_csvs(rc, traj)
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    print(f"wrote {len(traj.masks)} frames to {rc.output_dir}")
    return 0


def _write_sample_csvs(rc: "RunConfig", traj) -> None:
    window = rc.analysis_kwargs().get("contact_window")
    per_frame = []
    for m in traj.metrics:
        mask = traj.masks[m.k]
        if mask.is_empty or not mask.cells[..., 0].any():
            continue
        per_frame.append(
            (m.k, analysis.contact_angle_profile(mask, rc.beta, window))
        )
    if per_frame:
        serialize.save_contact_samples_csv(
            per_frame, rc.output_dir / "contact_samples.csv"
        )
    if rc.kv.get("analysis.velocity", "false").lower() in ("1", "true", "yes"):
        lam = float(traj.config.lam)
        for k in range(len(traj.masks) - 1, 0, -1):
            prev, nxt = traj.masks[k - 1], traj.masks[k]
            if not prev.is_empty and not nxt.is_empty:
                rep = analysis.velocity_curvature_report(prev, nxt, lam, window)
                serialize.save_velocity_samples_csv(
                    rep, rc.output_dir / "velocity_samples.csv"
                )
                break


def _warn_domain_size(rc: RunConfig) -> None:
    if rc.initial.is_empty:
        return
    p0 = energy.full_perimeter(rc.initial, energy.Stencil.axis(rc.grid))
    occupied = np.argwhere(rc.initial.cells)
    span = (occupied.max(axis=0) - occupied.min(axis=0) + 1) * rc.grid.h
    D = float(max(span[: rc.grid.d - 1].max() / 2.0, rc.grid.h))
    r0 = flow.domain_bound_R0(p0, rc.beta.kappa, rc.grid.d - 1, D)
    half = max(rc.grid.extents[: rc.grid.d - 1]) * rc.grid.h / 2.0
    if half < r0:
        warnings.warn(
            f"computational box half-width {half:g} is below the theoretical "
            f"confinement radius R0 = {r0:g}; the theoretical bound is "
            "astronomically conservative, so this is informational only",
            RuntimeWarning,
            stacklevel=2,
        )


def _cmd_minimize(args) -> int:
    rc = _load_run_config(args)
    objective = rc.kv.get("minimize.objective", "atw")
    rc.output_dir.mkdir(parents=True, exist_ok=True)
    if objective == "constrained-capillary":
        result = flow.constrained_capillary_minimizer(rc.initial, rc.beta, rc.stencil)
        eb = energy.capillary(result, rc.beta, rc.stencil)
    elif objective == "atw":
        cfg = rc.flow_config()
        result = flow.minimizing_movement_step(
            rc.initial,
            rc.beta,
            cfg.lam,
            solver=cfg.solver,
            selection=cfg.selection,
            stencil=rc.stencil,
            relax_tol=cfg.relax_tol,
            relax_max_iter=cfg.relax_max_iter,
        )
        eb = energy.atw(result, rc.initial, rc.beta, cfg.lam, rc.stencil)
    else:
        raise ConfigError("minimize.objective", f"unknown objective {objective!r}")
    try:
        serialize.save_mask_pgm(result, rc.output_dir / "result.pgm")
        serialize.save_json(eb.to_json_record(), rc.output_dir / "energy.json")
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    print(f"minimizer volume {result.volume:g}, energy {eb.atw_total:g}")
    return 0


def _cmd_oracle_compare(args) -> int:
    rc = _load_run_config(args)
    if rc.grid.n_cells > oracle.MAX_CELLS:
        raise ConfigError(
            "grid.extents",
            f"{rc.grid.n_cells} cells exceed the exhaustive-search cap "
            f"({oracle.MAX_CELLS})",
        )
    cfg = rc.flow_config()
    lam = float(cfg.lam)
    objective = rc.kv.get("oracle.objective", "atw")
    if objective not in ("atw", "capillary", "constrained-capillary"):
        raise ConfigError("oracle.objective", f"unknown objective {objective!r}")
    rep = oracle.enumerate_masks(rc.initial, rc.beta, lam, rc.stencil, objective)

    record: dict = {"oracle": rep.to_json_record(), "objective": objective}
    ok = True
    constraints = rc.initial if objective == "constrained-capillary" else None
    g = mincut.build_graph(
        rc.initial,
        rc.beta,
        lam if objective == "atw" else 0.0,
        rc.stencil,
        constraints=constraints,
        corrupt_unary_sign=args.corrupt_unary_sign,
    )
    res = mincut.solve_min_cut(g)
    if objective == "atw":
        e_mc = energy.atw(res.mask, rc.initial, rc.beta, lam, rc.stencil).atw_total
    else:
        e_mc = energy.capillary(res.mask, rc.beta, rc.stencil).capillary_total
    mc_exact = e_mc == rep.min_energy
    lattice_ok = (
        mincut.minimal_minimizer(g) == rep.lattice_min
        and mincut.maximal_minimizer(g) == rep.lattice_max
    )
    if args.corrupt_unary_sign:
        lattice_ok = mc_exact and lattice_ok  # corrupted graphs need not agree
    record["mincut"] = {
        "energy": e_mc,
        "cut_plus_offset": res.energy,
        "exact": bool(mc_exact),
        "lattice_agrees": bool(lattice_ok),
        "corrupted_unary": bool(args.corrupt_unary_sign),
    }
    ok = ok and mc_exact and lattice_ok

    if objective == "atw":
        sol = relax.minimize_levelset(rc.initial, rc.beta, lam, rc.stencil)
        ulp = 1e-12 * (1.0 + abs(rep.min_energy))
        within = abs(sol.primal - rep.min_energy) <= sol.gap + ulp
        record["relax"] = {
            "primal": sol.primal,
            "gap": sol.gap,
            "iterations": sol.iterations,
            "within_gap_of_oracle": bool(within),
        }
        ok = ok and within

    record["verdict"] = "PASS" if ok else "FAIL"
    rc.output_dir.mkdir(parents=True, exist_ok=True)
    try:
        serialize.save_json(record, rc.output_dir / "oracle_compare.json")
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    print(record["verdict"])
    return 0


def _cmd_analyze(args) -> int:
    rc = _load_run_config(args)
    frames = sorted(rc.output_dir.glob("frame_*.pgm"))
    if not frames:
        print(f"i/o error: no frames in {rc.output_dir}", file=sys.stderr)
        return 3
    if rc.grid.d == 3:
        groups: dict[str, list[Path]] = {}
        for p in frames:
            groups.setdefault(p.stem.split("_z")[0], []).append(p)
        masks = [serialize.load_mask_pgm(sorted(v)) for _, v in sorted(groups.items())]
    else:
        masks = [serialize.load_mask_pgm(p) for p in frames]
    cfg = rc.flow_config()
    traj = flow.rebuild_trajectory(masks, cfg)
    try:
        serialize.save_metrics_csv(traj, rc.output_dir / "metrics.csv")
        rec = analysis.run_report(traj, rc.beta.kappa, rc.beta, **rc.analysis_kwargs())
        serialize.save_json(rec, rc.output_dir / "analysis.json")
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    print(f"analyzed {len(masks)} frames from {rc.output_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dropflow",
        description="Droplet mean curvature flow with prescribed contact angle",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("evolve", _cmd_evolve),
        ("minimize", _cmd_minimize),
        ("oracle-compare", _cmd_oracle_compare),
        ("analyze", _cmd_analyze),
    ):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the key = value configuration file")
        p.add_argument(
            "overrides",
            nargs="*",
            help="extra key=value settings overriding the file",
        )
        if name == "oracle-compare":
            p.add_argument(
                "--corrupt-unary-sign",
                action="store_true",
                help="flip one linear coefficient in the cut graph (negative control)",
            )
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
