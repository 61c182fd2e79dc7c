"""Command-line front end: presets, scans, compilation, simulation, tomography.

Every subcommand reads one JSON scenario config (plus a handful of override
flags), writes plain CSV/JSON artifacts into an output directory, and drops a
run manifest next to them. Identical (config, seed, version) reproduces
byte-identical outputs except for the manifest's wall-clock duration.

Exit codes: 0 success, 1 usage/config error, 2 numerical or feasibility error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import berry, dilation, evolve, model, nvsim, spectra, tomo

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

TWO_PI = 2.0 * math.pi

try:
    VERSION = metadata.version("nhknot")
except metadata.PackageNotFoundError:  # pragma: no cover - source tree use
    VERSION = "0.0.0"

NUMERIC_ERRORS = (
    spectra.SpectraError,
    evolve.EvolveError,
    dilation.DilationError,
    nvsim.NvSimError,
    tomo.TomoError,
)


class ConfigError(Exception):
    """Bad or missing configuration value (usage error)."""


# ---------------------------------------------------------------------------
# config plumbing


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    """Top-level keys overlaid with the per-command section of the config."""
    merged = {k: v for k, v in cfg.items() if not isinstance(v, dict) or k in ("model", "nv")}
    sub = cfg.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    merged.update(sub)
    return merged


def _apply_flags(cfg: dict, args: argparse.Namespace) -> dict:
    for key in ("preset", "grid", "seed", "ensemble", "shots", "selective", "rwa"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _model_params(cfg: dict) -> model.ModelParams:
    if "model" in cfg:
        return model.params_from_dict(cfg["model"])
    preset = cfg.get("preset")
    if preset is None:
        raise ConfigError("need --preset or a 'model' section in the config")
    try:
        return model.preset_params(preset)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _nv_params(cfg: dict) -> nvsim.NvParams:
    fields = dict(cfg.get("nv", {}))
    if "lam" in cfg and "lam" not in fields:
        fields["lam"] = float(cfg["lam"])
    try:
        return nvsim.NvParams(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad 'nv' section: {exc}") from exc


def _time_grid(cfg: dict, t_final: float) -> np.ndarray:
    n = int(cfg.get("n_time", 2001))
    if n < 3 or n % 2 == 0:
        raise ConfigError("n_time must be an odd integer >= 3")
    return np.linspace(0.0, float(t_final), n)


# ---------------------------------------------------------------------------
# output plumbing


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = zip(*columns)
    lines = [",".join(header)]
    lines += [",".join(f"{v:.12g}" for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_manifest(out: Path, command: str, config_path: str | None,
                   seed: int | None, duration: float) -> None:
    write_json(out / "manifest.json", {
        "command": command,
        "config": config_path,
        "out_dir": str(out),
        "seed": seed,
        "version": VERSION,
        "duration_s": round(duration, 6),
    })


# ---------------------------------------------------------------------------
# subcommands


def cmd_bands(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    grid = int(cfg.get("grid", spectra.DEFAULT_GRID))
    structure = spectra.band_structure(params, grid)
    label = spectra.classify(params, grid)
    write_csv(out / "bands.csv",
              ["k", "re_e1", "im_e1", "re_e2", "im_e2"],
              [structure.k_grid,
               structure.energies[0].real, structure.energies[0].imag,
               structure.energies[1].real, structure.energies[1].imag])
    write_json(out / "classification.json", {
        "nu": label.nu,
        "tag": label.tag,
        "min_gap": label.min_gap,
        "grid": label.grid_size,
        "permutation": list(structure.permutation),
    })


def cmd_winding(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    grid = int(cfg.get("grid", spectra.DEFAULT_GRID))
    nu, raw = spectra.winding_number(params, grid, return_raw=True)
    write_json(out / "winding.json", {
        "nu": nu,
        "nu_raw": raw,
        "residue": abs(raw - nu),
        "grid": grid,
    })


def cmd_berry(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    grid = int(cfg.get("grid", spectra.DEFAULT_GRID))
    structure = spectra.band_structure(params, grid)
    result = berry.global_berry_phase(structure)
    write_json(out / "berry.json", {
        "Q_raw": result.q_raw,
        "Q_raw_over_pi": result.q_raw / math.pi,
        "Q_mod_2pi": result.q_mod_2pi,
        "parity": result.parity,
        "discretization_error": result.discretization_error,
        "grid": result.n_grid,
    })
    proj = berry.bloch_projections(structure)  # (2, N, 2) -> sx, sy per band
    n = structure.n_grid
    write_csv(out / "projections.csv",
              ["k", "band", "sx", "sy"],
              [np.tile(structure.k_grid, 2),
               np.repeat([0.0, 1.0], n),
               proj[:, :, 0].reshape(-1),
               proj[:, :, 1].reshape(-1)])


def cmd_evolve(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    k = math.pi * float(cfg.get("k_over_pi", 0.6))
    lam = float(cfg.get("lam", 1.0))
    t_final = float(cfg.get("t_final", 8.0))
    h = lam * model.bloch_hamiltonian(params, k)
    traj = evolve.integrate_nh(h, np.array([1.0, 0.0], dtype=complex), t_final,
                               dt=cfg.get("dt"))
    write_csv(out / "trace.csv",
              ["t", "p1", "re_c1", "im_c1", "re_c2", "im_c2", "log_norm"],
              [traj.t_grid, traj.populations,
               traj.states[:, 0].real, traj.states[:, 0].imag,
               traj.states[:, 1].real, traj.states[:, 1].imag,
               traj.log_norms])

    n_samples = int(cfg.get("fit_samples", 200))
    sigma = float(cfg.get("fit_sigma", 0.0))
    idx = np.unique(np.linspace(0, traj.t_grid.size - 1, n_samples).astype(int))
    p1 = traj.populations[idx]
    if sigma > 0:
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        p1 = np.clip(p1 + rng.normal(0.0, sigma, p1.size), 0.0, 1.0)
    k_fit, stderr, objective = evolve.fit_k(traj.t_grid[idx], p1, params, lam)
    write_json(out / "fit.json", {
        "k_true_over_pi": k / math.pi,
        "k_fit": k_fit,
        "k_fit_over_pi": k_fit / math.pi,
        "stderr": stderr,
        "objective": objective,
        "n_samples": int(idx.size),
        "noise_sigma": sigma,
    })


def cmd_dilate(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    nv = _nv_params(cfg)
    k = math.pi * float(cfg.get("k_over_pi", 0.6))
    h = nv.lam * model.bloch_hamiltonian(params, k)
    t_grid = _time_grid(cfg, cfg.get("t_final", 8.0))
    schedule = dilation.compile_dilation(
        h, t_grid, eta0=cfg.get("eta0"),
        margin=float(cfg.get("margin", dilation.DEFAULT_MARGIN)))
    pulses = dilation.pulse_schedule(schedule.coeffs, nv.omega_t1, nv.omega_t2,
                                     t_grid)
    write_csv(out / "pulses.csv",
              ["t_us", "Omega1_MHz", "phi1_rad", "omega1_radperus",
               "Omega2_MHz", "phi2_rad", "omega2_radperus"],
              [t_grid, pulses.Omega1, pulses.phi1, pulses.omega1,
               pulses.Omega2, pulses.phi2, pulses.omega2])

    herm = max(float(np.abs(m - m.conj().T).max()) for m in schedule.M)
    min_eig = min(float(np.linalg.eigvalsh(m - np.eye(2)).min())
                  for m in schedule.M)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    psi4 = dilation.dilated_trajectory(schedule, dilation.prepare_initial(schedule.eta0)[1])
    embedded = dilation.project_minus(psi4)
    embedded /= np.linalg.norm(embedded, axis=1)[:, None]
    reference = evolve.integrate_nh(h, psi0, t_grid[-1],
                                    dt=(t_grid[1] - t_grid[0]))
    ref_idx = np.linspace(0, reference.t_grid.size - 1, embedded.shape[0]).astype(int)
    overlaps = np.abs(np.einsum("ij,ij->i", embedded.conj(),
                                reference.states[ref_idx]))
    embed_err = float(np.sqrt(np.clip(1.0 - overlaps**2, 0.0, None)).max())
    write_json(out / "dilation.json", {
        "eta0": schedule.eta0,
        "margin": schedule.margin,
        "grid": int(t_grid.size),
        "t_final": float(t_grid[-1]),
        "max_residuals": {
            "metric_hermiticity": herm,
            "metric_min_eig": min_eig,
            "embedding_error": embed_err,
        },
    })


def cmd_simulate_nv(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    nv = _nv_params(cfg)
    k = math.pi * float(cfg.get("k_over_pi", 0.6))
    h = nv.lam * model.bloch_hamiltonian(params, k)
    t_grid = _time_grid(cfg, cfg.get("t_final", 8.0))
    schedule = dilation.compile_dilation(h, t_grid, eta0=cfg.get("eta0"))
    result = nvsim.simulate(
        nv, schedule,
        dephasing=cfg.get("dephasing", "none"),
        ensemble=int(cfg.get("ensemble", 1)),
        selective=bool(cfg.get("selective", True)),
        rwa=bool(cfg.get("rwa", True)),
        seed=int(cfg.get("seed", 0)))
    write_csv(out / "nvsim.csv",
              ["t", "p1", "p2", "p3", "p4", "sx", "sy", "sz", "c"],
              [result.t_grid,
               result.populations[:, 0], result.populations[:, 1],
               result.populations[:, 2], result.populations[:, 3],
               result.sx, result.sy, result.sz, result.c])
    ideal = nvsim.ideal_final_state(h)
    write_json(out / "nvsim.json", {
        "eta0": schedule.eta0,
        "c_final": float(result.c[-1]),
        "c_cond_final": float(result.c_cond[-1]),
        "c_ideal": nvsim.eigenstate_coherence(h),
        "deviation_final": nvsim.state_deviation(result.rho_cond[-1], ideal),
    })


def cmd_tomo(cfg: dict, out: Path) -> None:
    rates = tuple(cfg.get("rates", tomo.DEFAULT_RATES))
    shots = int(cfg.get("shots", 100_000))
    seed = int(cfg.get("seed", 0))

    if "counts" in cfg:
        counts = np.asarray(cfg["counts"], dtype=float)
        reference = None
    else:
        if "state4" in cfg:
            raw = np.asarray([complex(re, im) for re, im in cfg["state4"]])
        else:
            params = _model_params(cfg)
            k = math.pi * float(cfg.get("k_over_pi", 0.6))
            lam = float(cfg.get("lam", TWO_PI * 0.085))
            psi = nvsim.ideal_final_state(lam * model.bloch_hamiltonian(params, k))
            raw = np.kron(psi, np.array([1.0, 0.0]))  # readout-rotated carrier
        raw = raw / np.linalg.norm(raw)
        target = tomo.gauge_fix(raw)
        reference = target.subspace_state()
        expected = tomo.expected_counts(target, rates)
        counts = tomo.sample_counts(expected, shots, seed=seed) if shots > 0 else expected

    params_hat, loss = tomo.mle_reconstruct(counts, rates, seed=seed)
    state = params_hat.subspace_state()
    report = {
        "counts": counts,
        "rates": list(rates),
        "shots": shots,
        "loss": loss,
        "alpha": params_hat.alpha, "beta": params_hat.beta,
        "gamma": params_hat.gamma, "delta": params_hat.delta,
        "epsilon": params_hat.epsilon, "zeta": params_hat.zeta,
        "subspace_state": state,
    }
    if reference is not None:
        report["fidelity"] = tomo.fidelity(state, reference)
    write_json(out / "tomo.json", report)


# ---------------------------------------------------------------------------
# end-to-end pipeline


def _tracked_bands(params: model.ModelParams, k_grid: np.ndarray):
    """Continuation-tracked eigenvalues and seam permutation on an arbitrary grid."""
    pairs = spectra._eigenvalues_on_grid(params, k_grid)
    gaps = np.abs(pairs[0] - pairs[1])
    tracked, ok = spectra._track(pairs, gaps)
    if not ok:
        raise spectra.SpectraError("pipeline k grid too coarse for band tracking")
    last = tracked[:, -1]
    e0 = pairs[:, 0]
    if abs(last[0] - e0[0]) + abs(last[1] - e0[1]) <= abs(last[0] - e0[1]) + abs(last[1] - e0[0]):
        perm = (0, 1)
    else:
        perm = (1, 0)
    return tracked, perm, float(gaps.min())


def _pipeline_leg(params, nv, k, sign, gap_time, dt_target, dephasing,
                  ensemble, selective, shots, rates, seed):
    """Compile, simulate and tomograph one eigenstate at one quasi-momentum.

    Returns (reconstructed 2-vector, fidelity vs the exact dominant
    eigenstate, diagnostics dict, SimResult).
    """
    h = sign * nv.lam * model.bloch_hamiltonian(params, k)
    evals = np.linalg.eigvals(h)
    gap = abs(evals.imag[0] - evals.imag[1])
    if gap < 1e-9:
        raise dilation.DilationInfeasibleError("imaginary gap closes at this k")
    t_final = gap_time / gap
    n = int(math.ceil(t_final / dt_target))
    n += (n + 1) % 2
    t_grid = np.linspace(0.0, t_final, n)

    # For a traceless H the growth exponent is gap/2, so eta0 ~ exp(gap*T/2);
    # start just above it and back off upward if the metric still dips.
    eta0 = 2.0 * math.exp(evals.imag.max() * t_final)
    schedule = None
    for _ in range(4):
        try:
            schedule = dilation.compile_dilation(h, t_grid, eta0=eta0)
            break
        except dilation.DilationInfeasibleError:
            eta0 *= 4.0
    if schedule is None:
        raise dilation.DilationInfeasibleError("no feasible eta0 found")

    result = nvsim.simulate(nv, schedule, dephasing=dephasing,
                            ensemble=ensemble, selective=selective, seed=seed)
    # principal pure component of the final four-level state
    _, vecs = np.linalg.eigh(result.rho4_final / np.trace(result.rho4_final).real)
    psi4 = vecs[:, -1]
    # ancilla readout rotation: minus carrier -> nuclear |1>
    rot = np.stack([dilation.ANC_MINUS.conj(), dilation.ANC_PLUS.conj()])
    target = tomo.gauge_fix(np.kron(np.eye(2), rot) @ psi4)
    expected = tomo.expected_counts(target, rates)
    counts = tomo.sample_counts(expected, shots, seed=seed + 1) if shots > 0 else expected
    params_hat, loss = tomo.mle_reconstruct(counts, rates, seed=seed + 2)
    state = params_hat.subspace_state()
    fid = tomo.fidelity(state, nvsim.ideal_final_state(h))
    diag = {"eta0": schedule.eta0, "t_final": t_final, "grid": n, "loss": loss}
    return state, fid, diag, result


def cmd_pipeline(cfg: dict, out: Path) -> None:
    params = _model_params(cfg)
    nv = _nv_params(cfg)
    n_k = int(cfg.get("n_k", 20))
    if n_k < 8:
        raise ConfigError("n_k must be at least 8")
    gap_time = float(cfg.get("gap_time", 8.0))
    dt_target = float(cfg.get("dt_target", 0.0075))
    dephasing = cfg.get("dephasing", "quasistatic")
    ensemble = int(cfg.get("ensemble", 200))
    selective = bool(cfg.get("selective", False))
    shots = int(cfg.get("shots", 100_000))
    rates = tuple(cfg.get("rates", tomo.DEFAULT_RATES))
    seed = int(cfg.get("seed", 0))
    fit_samples = int(cfg.get("fit_samples", 160))

    # half-offset grid: the presets touch (Re or Im) only on the integer grid
    k_grid = (np.arange(n_k) + 0.5) / n_k * TWO_PI
    tracked, perm, min_gap = _tracked_bands(params, k_grid)
    nu = spectra.winding_number(params)

    vectors = np.full((2, n_k, 2), np.nan, dtype=complex)
    per_k = []
    n_failed = 0
    for i, k in enumerate(k_grid):
        entry = {"k_over_pi": k / math.pi, "error": None}
        sign_of_band = [
            1.0 if tracked[band, i].imag >= tracked[1 - band, i].imag else -1.0
            for band in range(2)
        ]
        try:
            for band in range(2):
                leg_seed = seed * 100_003 + 10 * i + 3 * band
                state, fid, diag, result = _pipeline_leg(
                    params, nv, k, sign_of_band[band], gap_time, dt_target,
                    dephasing, ensemble, selective, shots, rates, leg_seed)
                # anchor the (arbitrary) reconstruction phase to the smooth
                # model gauge so that Q_raw cannot pick up 2pi link slips
                eig = spectra.eigensolve2(model.bloch_hamiltonian(params, k))
                col = int(np.argmin(np.abs(eig.values - tracked[band, i])))
                overlap = np.vdot(eig.vectors[:, col], state)
                if abs(overlap) > 1e-12:
                    state = state * (overlap.conjugate() / abs(overlap))
                vectors[band, i] = state
                tag = "plus" if sign_of_band[band] > 0 else "minus"
                entry[f"fidelity_{tag}"] = fid
                entry[f"eta0_{tag}"] = diag["eta0"]
                entry["t_final"] = diag["t_final"]
                if band == 0:
                    # quasi-momentum fit from the renormalized population trace
                    p1 = result.rho_cond[:, 0, 0].real
                    idx = np.unique(np.linspace(
                        0, result.t_grid.size - 1, fit_samples).astype(int))
                    k_fit, stderr, objective = evolve.fit_k(
                        result.t_grid[idx], p1[idx], params,
                        sign_of_band[band] * nv.lam)
                    entry["k_fit_over_pi"] = k_fit / math.pi
                    entry["k_fit_stderr"] = stderr
                    entry["fit_objective"] = objective
        except (*NUMERIC_ERRORS, np.linalg.LinAlgError) as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
            n_failed += 1
        per_k.append(entry)

    report = {
        "preset": cfg.get("preset"),
        "nu": nu,
        "nu_parity": (-1) ** nu,
        "n_k": n_k,
        "min_imag_gap": min_gap,
        "n_failed": n_failed,
        "per_k": per_k,
    }
    if n_failed == 0:
        structure = spectra.BandStructure(
            k_grid=k_grid, energies=tracked, vectors=vectors,
            permutation=perm, min_gap=min_gap)
        q = berry.global_berry_phase(structure)
        fids = [entry[key] for entry in per_k
                for key in ("fidelity_plus", "fidelity_minus") if key in entry]
        k_errs = [abs(entry["k_fit_over_pi"] - entry["k_over_pi"])
                  for entry in per_k if "k_fit_over_pi" in entry]
        report.update({
            "Q_raw": q.q_raw,
            "Q_raw_over_pi": q.q_raw / math.pi,
            "Q_abs_over_pi": abs(q.q_raw) / math.pi,
            "Q_mod_2pi": q.q_mod_2pi,
            "parity_reconstructed": q.parity,
            "fidelity_min": float(min(fids)),
            "fidelity_median": float(np.median(fids)),
            "k_fit_max_err_over_pi": float(max(k_errs)),
        })
    else:
        report.update({"Q_raw": None, "Q_raw_over_pi": None,
                       "parity_reconstructed": None})
    write_json(out / "pipeline.json", report)


# ---------------------------------------------------------------------------
# argument parsing / entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with code 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bool_flag(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


COMMANDS = {
    "bands": cmd_bands,
    "winding": cmd_winding,
    "berry": cmd_berry,
    "evolve": cmd_evolve,
    "dilate": cmd_dilate,
    "simulate-nv": cmd_simulate_nv,
    "tomo": cmd_tomo,
    "pipeline": cmd_pipeline,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="nhknot",
                     description="Knot topology of non-Hermitian two-band "
                                 "lattices: spectra, Berry phases, dilation, "
                                 "spin simulation and tomography.")
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--preset", choices=("unlink", "unknot", "hopf_link"))
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--grid", type=int, metavar="N")
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--ensemble", type=int, metavar="N")
        p.add_argument("--shots", type=int, metavar="N")
        p.add_argument("--selective", type=_bool_flag, metavar="BOOL")
        p.add_argument("--rwa", type=_bool_flag, metavar="BOOL")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = _apply_flags(_section(_load_config(args.config), args.command),
                           args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"nhknot {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"nhknot {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_manifest(out, args.command, args.config, cfg.get("seed"),
                   time.perf_counter() - started)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
