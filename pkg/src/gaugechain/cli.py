"""Batch CLI: reproduce the reference experiments from a config file.

Every subcommand reads one config, writes deterministic CSV tables plus a
rendered figure into the output directory, and finishes with a manifest
listing every artifact.  Exit codes: 0 success, 2 config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, plots
from .capacitance import NumericalError, eigenvalues, spectrum
from .chains import assemble_chain, sample_sequence
from .config import ConfigError, ExperimentConfig, config_hash, load_config
from .experiments import (
    contours_from_grid,
    critical_gamma,
    dos_convergence,
    empirical_cdf,
    envelope,
    lyapunov_estimate,
    winding_curve,
)
from .propagation import classify, lyapunov_grid, saxon_hutner

LOG10_E = float(np.log10(np.e))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def _write_csv(path: Path, header, rows):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(cell) for cell in row) + "\n")


def _figure_path(out: Path, name: str, svg: bool) -> Path:
    return out / f"{name}.{'svg' if svg else 'png'}"


def _realise(config: ExperimentConfig, seed: int, num_blocks=None, library=None):
    lib = library if library is not None else config.library
    m = num_blocks if num_blocks is not None else config.num_blocks
    return assemble_chain(lib, sample_sequence(lib, m, seed))


def cmd_spectrum(config: ExperimentConfig, seed: int, out: Path, threads: int, svg: bool):
    sec = config.spectrum
    chain = _realise(config, seed)
    data = spectrum(chain)
    cdf = empirical_cdf(data.eigenvalues)
    lambdas = np.linspace(sec["lambda_min"], sec["lambda_max"], sec["lambda_count"])
    labels = [classify(config.library.blocks, x) for x in lambdas]
    certified = [saxon_hutner(config.library.blocks, x) for x in lambdas]

    artifacts = []
    path = out / "eigenvalues.csv"
    _write_csv(path, ["index", "eigenvalue"], list(enumerate(data.eigenvalues)))
    artifacts.append(path)

    path = out / "cdf.csv"
    _write_csv(path, ["lambda", "cdf"],
               [(x, cdf.evaluate(x)) for x in lambdas])
    artifacts.append(path)

    path = out / "regions.csv"
    block_cols = [f"block{i}_pass" for i in range(config.library.num_blocks)]
    _write_csv(
        path,
        ["lambda", "region", "certified_gap"] + block_cols,
        [
            (x, lab.region.value, cert) + lab.block_passes
            for x, lab, cert in zip(lambdas, labels, certified)
        ],
    )
    artifacts.append(path)

    if sec["modes"]:
        n = chain.num_resonators
        header = ["index", "eigenvalue"]
        for j in range(1, n + 1):
            header += [f"sign_{j}", f"log10mag_{j}"]
        rows = []
        for k in range(data.count):
            row = [k, data.eigenvalues[k]]
            log10 = data.log_magnitude[:, k] * LOG10_E
            for j in range(n):
                row += [int(data.signs[j, k]), log10[j]]
            rows.append(row)
        path = out / "modes.csv"
        _write_csv(path, header, rows)
        artifacts.append(path)

    fig = _figure_path(out, "spectrum", svg)
    plots.save_spectrum(fig, lambdas, labels, cdf)
    artifacts.append(fig)
    return artifacts


def cmd_lyapunov_grid(config: ExperimentConfig, seed: int, out: Path, threads: int, svg: bool):
    sec = config.lyapunov_grid
    chain = _realise(config, seed)
    res = np.linspace(sec["re_min"], sec["re_max"], sec["re_count"])
    ims = np.linspace(sec["im_min"], sec["im_max"], sec["im_count"])
    lams = (res[None, :] + 1j * ims[:, None]).ravel()
    total, lsym, _ = lyapunov_grid(chain, lams)
    contour_set = contours_from_grid(res, ims, total.reshape(len(ims), len(res)))
    estimates = np.array([lyapunov_estimate(config.library, x) for x in lams])
    eigs = eigenvalues(chain)
    eig_total, _, _ = lyapunov_grid(chain, eigs.astype(complex))
    curves = {
        f"block{i}": winding_curve(b, sec["theta_samples"])
        for i, b in enumerate(config.library.blocks)
    }

    artifacts = []
    path = out / "grid.csv"
    _write_csv(
        path,
        ["re", "im", "lyapunov", "lyapunov_symmetrised", "estimate"],
        [
            (lam.real, lam.imag, t, ls, est)
            for lam, t, ls, est in zip(lams, total, lsym, estimates)
        ],
    )
    artifacts.append(path)

    path = out / "contours.csv"
    rows = []
    for pid, line in enumerate(contour_set.polylines):
        rows += [(pid, vid, z.real, z.imag) for vid, z in enumerate(line)]
    _write_csv(path, ["polyline", "vertex", "re", "im"], rows)
    artifacts.append(path)

    path = out / "winding.csv"
    rows = []
    for name, curve in curves.items():
        for b, band in enumerate(curve.bands):
            rows += [
                (name, b, th, z.real, z.imag)
                for th, z in zip(curve.thetas, band)
            ]
    _write_csv(path, ["block", "band", "theta", "re", "im"], rows)
    artifacts.append(path)

    path = out / "eigenvalues.csv"
    _write_csv(path, ["index", "eigenvalue", "lyapunov"],
               [(k, x, t) for k, (x, t) in enumerate(zip(eigs, eig_total))])
    artifacts.append(path)

    fig = _figure_path(out, "lyapunov_grid", svg)
    plots.save_lyapunov_grid(fig, contour_set, curves, eigs)
    artifacts.append(fig)
    return artifacts


def cmd_envelope(config: ExperimentConfig, seed: int, out: Path, threads: int, svg: bool):
    sec = config.envelope
    gammas = sec["gammas"]
    if gammas is None:
        from .experiments import uniform_gamma

        gammas = [uniform_gamma(config.library)]
    prob_rows = sec["probabilities"]
    if prob_rows is None:
        prob_rows = [list(config.library.probabilities)]
    combos = [(tuple(p), g) for p in prob_rows for g in gammas]

    def one(combo):
        probs, gamma = combo
        lib = config.library.with_probabilities(probs).with_gamma(gamma)
        chain = _realise(config, seed, library=lib)
        return envelope(chain, sec["lambda_cut"])

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, combos))
    else:
        results = [one(c) for c in combos]

    artifacts = []
    rows = []
    labelled = []
    for (probs, gamma), env in zip(combos, results):
        label = "p=(" + ",".join(f"{p:g}" for p in probs) + f"), gamma={gamma:g}"
        labelled.append((label, env.log10_values))
        rows += [
            (",".join(f"{p:g}" for p in probs), gamma, j + 1, val)
            for j, val in enumerate(env.log10_values)
        ]
    path = out / "envelope.csv"
    _write_csv(path, ["probabilities", "gamma", "site", "log10_envelope"], rows)
    artifacts.append(path)

    fig = _figure_path(out, "envelope", svg)
    plots.save_envelope(fig, labelled)
    artifacts.append(fig)
    return artifacts


def cmd_critical_gamma(config: ExperimentConfig, seed: int, out: Path, threads: int, svg: bool):
    sec = config.critical_gamma
    seeds = [seed + k for k in range(sec["num_seeds"])]
    result = critical_gamma(
        config.library,
        lambda_cut=sec["lambda_cut"],
        num_blocks=config.num_blocks,
        seeds=seeds,
        reference_gamma=sec["reference_gamma"],
        exact=sec["exact"],
        threads=threads,
    )
    lib = config.library.with_gamma(sec["reference_gamma"])
    eig_sets, exp_sets, rows = [], [], []
    for s in seeds:
        chain = _realise(config, s, library=lib)
        lams = eigenvalues(chain, lambda_max=sec["lambda_cut"])
        _, lsym, _ = lyapunov_grid(chain, lams.astype(complex))
        eig_sets.append(lams)
        exp_sets.append(lsym)
        rows += [(s, x, ls) for x, ls in zip(lams, lsym)]

    artifacts = []
    path = out / "lyapunov_per_eigenvalue.csv"
    _write_csv(path, ["seed", "eigenvalue", "lyapunov_symmetrised"], rows)
    artifacts.append(path)

    path = out / "critical_gamma.json"
    path.write_text(json.dumps({
        "gamma_c": result.gamma_c,
        "max_symmetrised_exponent": result.max_symmetrised,
        "decay_per_gamma": result.decay_ratio,
        "reference_gamma": result.reference_gamma,
        "per_seed_max": list(result.per_seed_max),
        "seeds": seeds,
    }, indent=2) + "\n")
    artifacts.append(path)

    fig = _figure_path(out, "critical_gamma", svg)
    plots.save_critical_gamma(fig, eig_sets, exp_sets, result)
    artifacts.append(fig)
    print(f"gamma_c = {result.gamma_c:.17g}")
    return artifacts


def cmd_dos_convergence(config: ExperimentConfig, seed: int, out: Path, threads: int, svg: bool):
    sec = config.dos_convergence
    result = dos_convergence(
        config.library, sec["num_blocks_list"], sec["seeds"], threads=threads
    )
    rows = []
    for m in result.num_blocks_list:
        mat = result.cross_seed[m]
        for i, si in enumerate(result.seeds):
            for j, sj in enumerate(result.seeds):
                if i < j:
                    rows.append(("cross_seed", m, si, sj, mat[i, j]))
    for s in result.seeds:
        for (m1, m2), d in zip(
            zip(result.num_blocks_list[:-1], result.num_blocks_list[1:]),
            result.successive[s],
        ):
            rows.append(("successive", f"{m1}->{m2}", s, s, d))

    artifacts = []
    path = out / "dos_distances.csv"
    _write_csv(path, ["kind", "num_blocks", "seed_a", "seed_b", "distance"], rows)
    artifacts.append(path)

    fig = _figure_path(out, "dos_convergence", svg)
    plots.save_dos_convergence(fig, result)
    artifacts.append(fig)
    return artifacts


def cmd_winding(config: ExperimentConfig, seed: int, out: Path, threads: int, svg: bool):
    sec = config.winding
    curves = {
        f"block{i}": winding_curve(b, sec["theta_samples"])
        for i, b in enumerate(config.library.blocks)
    }
    rows = []
    for name, curve in curves.items():
        for b, band in enumerate(curve.bands):
            rows += [(name, b, th, z.real, z.imag) for th, z in zip(curve.thetas, band)]

    artifacts = []
    path = out / "winding.csv"
    _write_csv(path, ["block", "band", "theta", "re", "im"], rows)
    artifacts.append(path)

    fig = _figure_path(out, "winding", svg)
    plots.save_winding(fig, curves)
    artifacts.append(fig)
    return artifacts


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "lyapunov-grid": cmd_lyapunov_grid,
    "envelope": cmd_envelope,
    "critical-gamma": cmd_critical_gamma,
    "dos-convergence": cmd_dos_convergence,
    "winding": cmd_winding,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaugechain",
        description="Spectra and localisation of block-disordered resonator chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="path to the YAML config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="parallel work items")
        p.add_argument("--svg", action="store_true", help="render figures as SVG")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.time()
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = config.seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stored_config = out / "config.yaml"
    if Path(args.config).resolve() != stored_config.resolve():
        shutil.copyfile(args.config, stored_config)
    try:
        artifacts = _COMMANDS[args.command](config, seed, out, max(1, args.threads), args.svg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest = {
        "tool": "gaugechain",
        "version": __version__,
        "command": args.command,
        "config": stored_config.name,
        "config_sha256": config_hash(stored_config),
        "seed_list": [seed],
        "artifacts": sorted(p.name for p in artifacts),
        "wall_clock_s": time.time() - started,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
