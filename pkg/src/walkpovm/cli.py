"""Command-line interface: ``walkpovm <subcommand> ...``.

Every file written is a deterministic function of the inputs, the seeds and the
package version. Sampling runs also write ``manifest.json``; passing it back
through ``pipeline --manifest`` reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import KET_H, KET_V, make_init_state, make_sic_vector, projector, trace_distance
from .experiment import (
    CountRecord,
    NoiseModel,
    WalkerDensity,
    bootstrap_errors,
    evolve_density,
    sample_counts,
)
from .povm import AmbiguousMatchError, PovmSet, match_tetrahedron, povm_elements, verify_sic
from .tomography import linear_inversion, mle_reconstruct, probs_by_index
from .walk import ScheduleError, WalkerState, WalkSchedule, evolve, sic_schedule, position_distribution
from .waveplates import PlateSetting, compile_coin, verify_table

EXIT_USAGE = 2
EXIT_FAIL = 1


class CliError(Exception):
    """User-facing error; reported on stderr with exit status 2."""


# parsing helpers ---------------------------------------------------------


def _read_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} file {path!r} is not valid JSON: {exc}") from None


def load_schedule(path: str | None) -> WalkSchedule:
    if path is None:
        return sic_schedule()
    try:
        return WalkSchedule.from_json(_read_json(path, "schedule"))
    except ScheduleError as exc:
        raise CliError(str(exc)) from None


_NAMED_STATES = {"H": KET_H, "V": KET_V}
_NAMED_STATES.update({f"psi{i}": make_init_state(i) for i in range(1, 5)})
_NAMED_STATES.update({f"xi{i}": make_sic_vector(i) for i in range(1, 5)})


def parse_state(spec: str) -> np.ndarray:
    """A named coin state (``psi1``..``psi4``, ``xi1``..``xi4``, ``H``, ``V``) or a JSON file."""
    if spec in _NAMED_STATES:
        return np.array(_NAMED_STATES[spec])
    if spec.isdigit() and f"psi{spec}" in _NAMED_STATES:
        return np.array(_NAMED_STATES[f"psi{spec}"])
    if not os.path.exists(spec):
        raise CliError(f"--state: unknown state {spec!r} (use psi1..psi4, xi1..xi4, H, V or a JSON file)")
    data = _read_json(spec, "state")
    try:
        if isinstance(data, dict):
            data = [data["h"], data["v"]]
        vec = np.array([complex(re, im) for re, im in data])
    except (KeyError, TypeError, ValueError):
        raise CliError("state: expected [[re, im], [re, im]] or {\"h\": [re, im], \"v\": [re, im]}") from None
    if vec.shape != (2,):
        raise CliError("state: expected exactly two amplitudes")
    if abs(np.vdot(vec, vec).real - 1) > 1e-9:
        raise CliError("state: amplitudes are not normalized")
    return vec


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("WALKPOVM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"WALKPOVM_SEED must be an integer, got {env!r}") from None


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def distribution_csv(dist: dict[int, float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["position", "probability"])
    for x in sorted(dist):
        w.writerow([x, repr(float(dist[x]))])
    return buf.getvalue()


def read_distribution_csv(text: str) -> dict[int, float]:
    return {int(r["position"]): float(r["probability"]) for r in csv.DictReader(io.StringIO(text))}


def read_counts(path: str) -> CountRecord:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read counts file {path!r}: {exc.strerror}") from None
    try:
        if text.lstrip().startswith("{"):
            return CountRecord.from_json(json.loads(text))
        return CountRecord.from_csv(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"counts file {path!r}: {exc}") from None


class Output:
    """Writes named artifacts into ``out_dir`` or, without one, to stdout."""

    def __init__(self, out_dir: str | None, stdout=None):
        self.out_dir = Path(out_dir) if out_dir else None
        self.stdout = stdout or sys.stdout
        self.written: dict[str, str] = {}
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, text: str, primary: bool = True) -> None:
        if self.out_dir is None:
            if primary:
                self.stdout.write(text)
            return
        (self.out_dir / name).write_text(text)
        self.written[name] = hashlib.sha256(text.encode()).hexdigest()


# subcommands -------------------------------------------------------------


def cmd_simulate(args, out: Output) -> int:
    sched = load_schedule(args.schedule)
    coin = parse_state(args.state)
    final = evolve(WalkerState.localized(coin, sched.origin), sched)
    dist = position_distribution(final)
    # keep zero rows at sites the measurement can report
    for x, e in povm_elements(sched).elements.items():
        dist.setdefault(x, 0.0)
    state_doc = {
        "schedule_digest": sched.digest(),
        "initial": {"position": sched.origin, "coin": [[c.real, c.imag] for c in coin]},
        "amplitudes": final.to_json(),
    }
    if args.format == "json":
        out.emit("final_state.json", dumps({**state_doc, "distribution": {str(k): v for k, v in sorted(dist.items())}}))
    else:
        out.emit("distribution.csv", distribution_csv(dist))
        out.emit("final_state.json", dumps(state_doc), primary=False)
    return 0


def cmd_extract_povm(args, out: Output) -> int:
    sched = load_schedule(args.schedule)
    povm = povm_elements(sched)
    report = verify_sic(povm)
    doc = povm.to_json()
    doc["verify_sic"] = report.to_json()
    try:
        assign = match_tetrahedron(povm, [make_sic_vector(i) for i in range(1, 5)])
        doc["assignment"] = {str(x): i for x, i in assign.items()}
    except AmbiguousMatchError as exc:
        doc["assignment"] = None
        doc["assignment_error"] = str(exc)
    out.emit("povm.json", dumps(doc))
    return 0


def _table_rows(sched: WalkSchedule, round_digits: int | None):
    rows = []
    for k, j, sub in sched.substeps():
        for x, coin in sub.coins.items():
            seq = compile_coin(coin)
            if round_digits is not None:
                seq = tuple(p.rounded(round_digits) for p in seq)
            rows.append({"step": k, "substep": j, "site": x, "plates": [p.to_json() for p in seq]})
    return rows


def cmd_compile(args, out: Output) -> int:
    sched = load_schedule(args.schedule)
    rows = _table_rows(sched, 2 if args.round else None)
    if args.format == "json":
        out.emit("table.json", dumps({"schedule_digest": sched.digest(), "entries": rows}))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "site", "order", "kind", "angle"])
        for r in rows:
            for n, p in enumerate(r["plates"]):
                w.writerow([r["step"], r["site"], n, p["kind"], repr(p["angle"])])
        out.emit("table.csv", buf.getvalue())
    return 0


def load_table(path: str | None) -> dict:
    if path is None:
        from .fixtures import PLATE_TABLE

        return dict(PLATE_TABLE)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read table file {path!r}: {exc.strerror}") from None
    table: dict = {}
    try:
        if text.lstrip().startswith("{"):
            for r in json.loads(text)["entries"]:
                table[(int(r["step"]), int(r["site"]))] = tuple(PlateSetting.from_json(p) for p in r["plates"])
        else:
            for r in csv.DictReader(io.StringIO(text)):
                key = (int(r["step"]), int(r["site"]))
                table.setdefault(key, [])
                if r.get("kind"):
                    table[key].append((int(r.get("order") or len(table[key])), PlateSetting(r["kind"], float(r["angle"]))))
            table = {k: tuple(p for _, p in sorted(v, key=lambda t: t[0])) for k, v in table.items()}
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"table file {path!r}: malformed entry ({exc})") from None
    return table


def cmd_verify_table(args, out: Output) -> int:
    sched = load_schedule(args.schedule)
    table = load_table(args.table)
    try:
        rep = verify_table(sched, table)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    lines = [f"{'step':>4} {'site':>4}  {'distance':>10}  result  plates"]
    for e in rep.entries:
        plates = " -> ".join(f"{e.plates[i].kind} {e.plates[i].angle:g}" for i in e.order) or "(none)"
        lines.append(f"{e.step:>4} {e.site:>4}  {e.distance:10.3e}  {'pass' if e.passed else 'FAIL':6}  {plates}")
    for k, x in rep.missing:
        lines.append(f"{k:>4} {x:>4}  missing table entry")
    lines.append(f"overall: {'pass' if rep.passed else 'FAIL'} (tol {rep.tol:g})")
    out.emit("verify_table.txt", "\n".join(lines) + "\n")
    if out.out_dir:
        out.emit("verify_table.json", dumps(rep.to_json()))
        out.stdout.write("\n".join(lines) + "\n")
    return 0 if rep.passed else EXIT_FAIL


def _noise_from_args(args) -> tuple[NoiseModel, int]:
    cfg = {}
    if getattr(args, "noise", None):
        cfg = _read_json(args.noise, "noise")
        if not isinstance(cfg, dict):
            raise CliError("noise file must hold an object")
    vis = args.visibility if args.visibility is not None else cfg.get("visibility", 1.0)
    jit = args.jitter_deg if args.jitter_deg is not None else cfg.get("angle_jitter_deg", 0.0)
    seed = resolve_seed(args.seed if args.seed is not None else cfg.get("seed"))
    shots = args.shots if args.shots is not None else cfg.get("shots", 32_000)
    try:
        shots = int(shots)
        noise = NoiseModel(float(vis), float(jit), int(seed))
    except (TypeError, ValueError) as exc:
        raise CliError(f"noise: {exc}") from None
    if shots <= 0:
        raise CliError(f"--shots must be positive, got {shots}")
    return noise, shots


def _sample(sched, coin, noise, shots):
    rho0 = WalkerDensity.from_coin(projector(coin), sched.origin)
    dist = evolve_density(rho0, sched, noise).position_distribution()
    rec = sample_counts(dist, shots, noise.seed)
    sigma = bootstrap_errors(rec, trials=1000, seed=noise.seed)
    return dist, rec, sigma


def _manifest(command, sched, state, coin, noise, shots, out: Output) -> str:
    return dumps(
        {
            "command": command,
            "version": __version__,
            "inputs": {
                "schedule": sched.to_json(),
                "schedule_digest": sched.digest(),
                "state": state,
                "coin": [[float(c.real), float(c.imag)] for c in coin],
            },
            "seeds": {"noise": noise.seed, "sampling": noise.seed, "bootstrap": noise.seed},
            "parameters": {
                "visibility": noise.visibility,
                "angle_jitter_deg": noise.angle_jitter_deg,
                "shots": shots,
            },
            "outputs": dict(sorted(out.written.items())),
        }
    )


def cmd_sample(args, out: Output) -> int:
    sched = load_schedule(args.schedule)
    coin = parse_state(args.state)
    noise, shots = _noise_from_args(args)
    _, rec, sigma = _sample(sched, coin, noise, shots)
    if args.format == "json":
        out.emit("counts.json", dumps(rec.to_json()))
        out.emit("counts.csv", rec.to_csv(sigma), primary=False)
    else:
        out.emit("counts.csv", rec.to_csv(sigma))
        out.emit("counts.json", dumps(rec.to_json()), primary=False)
    if out.out_dir:
        out.emit("manifest.json", _manifest("sample", sched, args.state, coin, noise, shots, out))
    return 0


def _reconstruct(rec: CountRecord, povm: PovmSet, method: str) -> dict:
    # photons at sites the ideal measurement never reaches carry no information
    # about the coin; they are set aside and reported
    stray = {x: c for x, c in rec.counts.items() if x not in povm.elements and c > 0}
    if stray:
        rec = CountRecord({x: c for x, c in rec.counts.items() if x in povm.elements}, rec.seed, rec.reconstructed)
        if rec.total == 0:
            raise ValueError(f"no counts at POVM positions (all {sum(stray.values())} outside {povm.positions})")
    doc: dict = {"counts_total": rec.total, "discarded_counts": {str(x): c for x, c in stray.items()}}
    if method in ("mle", "both"):
        doc["mle"] = mle_reconstruct(rec, povm).to_json()
    if method in ("linear", "both"):
        try:
            assign = match_tetrahedron(povm, [make_sic_vector(i) for i in range(1, 5)])
        except AmbiguousMatchError as exc:
            if method == "linear":
                raise CliError(f"linear inversion needs a SIC POVM: {exc}") from None
            doc["linear"] = None
        else:
            probs = probs_by_index(rec.frequencies(), assign)
            for i in range(1, 5):
                probs.setdefault(i, 0.0)
            doc["linear"] = linear_inversion(probs).to_json()
            doc["assignment"] = {str(x): i for x, i in assign.items()}
    return doc


def cmd_reconstruct(args, out: Output) -> int:
    if not args.counts:
        raise CliError("--counts is required")
    rec = read_counts(args.counts)
    if args.povm:
        try:
            povm = PovmSet.from_json(_read_json(args.povm, "POVM"))
        except ValueError as exc:
            raise CliError(str(exc)) from None
    else:
        povm = povm_elements(load_schedule(args.schedule))
    try:
        doc = _reconstruct(rec, povm, args.method)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out.emit("reconstruction.json", dumps(doc))
    return 0


def cmd_pipeline(args, out: Output) -> int:
    if args.manifest:
        man = _read_json(args.manifest, "manifest")
        try:
            sched = WalkSchedule.from_json(man["inputs"]["schedule"])
            state = man["inputs"]["state"]
            coin = np.array([complex(re, im) for re, im in man["inputs"]["coin"]])
            params = man["parameters"]
            noise = NoiseModel(params["visibility"], params["angle_jitter_deg"], man["seeds"]["noise"])
            shots = int(params["shots"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"manifest: missing or bad field ({exc})") from None
    else:
        sched = load_schedule(args.schedule)
        state = args.state
        noise, shots = _noise_from_args(args)
        coin = parse_state(state)
    stage = "simulate"
    try:
        povm = povm_elements(sched)
        stage = "sample"
        dist, rec, sigma = _sample(sched, coin, noise, shots)
        stage = "reconstruct"
        doc = _reconstruct(rec, povm, "both")
    except (ValueError, RuntimeError) as exc:
        raise CliError(f"pipeline stage {stage!r}: {exc}") from None
    truth = projector(coin)
    doc["true_state"] = [[[z.real, z.imag] for z in row] for row in truth]
    doc["mle_trace_distance"] = trace_distance(
        np.array([[complex(*z) for z in row] for row in doc["mle"]["rho"]]), truth
    )
    out.emit("distribution.csv", distribution_csv(dist), primary=False)
    out.emit("counts.json", dumps(rec.to_json()), primary=False)
    out.emit("counts.csv", rec.to_csv(sigma), primary=False)
    out.emit("povm.json", dumps(povm.to_json()), primary=False)
    out.emit("reconstruction.json", dumps(doc))
    if out.out_dir:
        out.emit("manifest.json", _manifest("pipeline", sched, state, coin, noise, shots, out))
    return 0


def cmd_verify_paper(args, out: Output) -> int:
    from .acceptance import run_all

    results = run_all()
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    out.emit("verify_paper.txt", "\n".join(lines) + "\n")
    if out.out_dir:
        out.stdout.write("\n".join(lines) + "\n")
    return 0 if n_pass == len(results) else EXIT_FAIL


# argument parser ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walkpovm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, state=False, noise=False, fmt=None):
        sp.add_argument("--schedule", help="schedule JSON (default: the built-in three-step SIC schedule)")
        sp.add_argument("--out-dir", help="write artifacts here instead of printing to stdout")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default=fmt)
        if state:
            sp.add_argument("--state", default="psi1", help="psi1..psi4, xi1..xi4, H, V or a JSON file")
        if noise:
            sp.add_argument("--seed", type=int, help="RNG seed (default: $WALKPOVM_SEED or 0)")
            sp.add_argument("--shots", type=int, help="number of detections (default 32000)")
            sp.add_argument("--visibility", type=float, help="coherence retained per step (default 1)")
            sp.add_argument("--jitter-deg", type=float, help="std-dev of plate-angle errors in degrees (default 0)")

    sp = sub.add_parser("simulate", help="exact evolution: distribution CSV and final-state JSON")
    common(sp, state=True, fmt="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("extract-povm", help="POVM elements of a schedule plus the SIC check")
    common(sp)
    sp.set_defaults(func=cmd_extract_povm)

    sp = sub.add_parser("compile", help="wave-plate angles for every coin of a schedule")
    common(sp, fmt="json")
    sp.add_argument("--round", action="store_true", help="round angles to 0.01 degree")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("verify-table", help="compare a plate table with a schedule's coins")
    common(sp)
    sp.add_argument("--table", help="table JSON/CSV as written by 'compile' (default: built-in table)")
    sp.set_defaults(func=cmd_verify_table)

    sp = sub.add_parser("sample", help="noisy simulation and multinomial counts")
    common(sp, state=True, noise=True, fmt="csv")
    sp.add_argument("--noise", help="JSON {visibility, angle_jitter_deg, seed, shots}; flags override")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("reconstruct", help="state reconstruction from counts")
    common(sp)
    sp.add_argument("--counts", help="counts JSON or CSV")
    sp.add_argument("--povm", help="POVM JSON from extract-povm (default: extracted from --schedule)")
    sp.add_argument("--method", choices=("mle", "linear", "both"), default="both")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("pipeline", help="simulate -> sample -> reconstruct with a run manifest")
    common(sp, state=True, noise=True)
    sp.add_argument("--manifest", help="re-run from a previous manifest.json")
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("verify-paper", help="run the acceptance checks against the embedded reference data")
    sp.add_argument("--out-dir")
    sp.set_defaults(func=cmd_verify_paper)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = Output(getattr(args, "out_dir", None))
        return args.func(args, out)
    except CliError as exc:
        print(f"walkpovm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
