"""
Campaign driver.

    dirac-lab eigen bounds --n 3 --nu 0.5 --k-max 5
    dirac-lab eigen eval --n 2 --k 0.5 --nu 0 --rho 1e-3..100
    dirac-lab transform residuals --n 3 --nu 0.5
    dirac-lab evolve run --n 3 --nu 0.5
    dirac-lab strichartz scan --n 3 --nu 0.5 --grid-pq default
    dirac-lab smoothing morrey --n 3 --nu 0.5 --R 2^-6..2^6
    dirac-lab hartree solve --omega yukawa:b=1,c=1 --p 2 --T auto

Exit codes: 0 every acceptance gate passed, 1 a gate failed or a computation broke down,
2 the configuration is invalid.
"""

from __future__ import annotations

import argparse
import contextvars
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable

import numpy as np

from src.cache_manager import CacheManager
from src.config_loader import load_config
from src.config_validation import validate_or_raise
from src.eigen import (
    BoundReport,
    WaveIndex,
    channel_ladder,
    default_rho_grid,
    eval_psi_array,
    fit_decay_constant,
    make_channel,
    uniformity_spread,
    verify_derivative_bounds,
    verify_pointwise_bounds,
)
from src.error_handler import (
    ConfigurationError,
    CouplingError,
    DataValidationError,
    DiracCoulombError,
    ErrorReporter,
    NonContractionError,
)
from src.hankel import (
    HankelTransformer,
    TransformPlan,
    default_grids,
    diagonalization_residual,
    inversion_error,
    isometry_ratio,
)
from src.logging_utils import bind_campaign, configure_logging, log_event
from src.nonlinear import (
    ConvolutionKernel,
    PicardSolver,
    auto_time,
    wellposedness_certificate,
)
from src.norms import (
    INF,
    admissibility,
    critical_exponents,
    morrey_functional,
    smoothing_average,
    strichartz_ratio,
)
from src.partialwave import PartialWaveField, RadialGrid, is_dirac_radial_index
from src.performance_monitor import get_monitor
from src.propagator import Propagator, band_limited_datum, bump_profile, spectral_grid
from src.report_generator import ReportGenerator
from src.utils import config_hash, dyadic_members, parse_range, parse_scalar
from src.validators import validate_time

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

R_MIN = 1e-4
RHO_MIN = 1e-3
DEFAULT_P_VALUES = (2.0, 4.0, 8.0, INF)
DEFAULT_Q_VALUES = (2.0, 4.0, 6.0, 10.0)
HOMOGENEITY_TOLERANCE = 1e-12
MORREY_SCALES = (0.5, 2.0)
MORREY_SCALE_TOLERANCE = 0.05
UNITARITY_TOLERANCE = 1e-3
HALVING_FACTOR = 0.5
# the first factor is linear in T up to a relative O(T rho_max) remainder; the halving check runs on a short window
HALVING_WINDOW = 2.0**-10
HALVING_RTOL = 1e-2
SLOPE_TOLERANCE = 0.01


# --- shared helpers -----------------------------------------------------------------------------


def _datum_index(n: int, k: float, nonradial: bool = False) -> WaveIndex:
    """k = 0 picks the lowest channel, or the next one up for non-radial data."""
    lowest = 0.5 if n == 2 else 1.0
    if not k:
        k = lowest + 1.0 if nonradial else lowest
    return WaveIndex(n, k, None if n == 2 else 0.5)


def _cache(config: dict[str, Any]) -> CacheManager | None:
    cache_dir = config["general"].get("cache_dir")
    if not cache_dir:
        return None
    cache = CacheManager(cache_dir)
    removed = cache.clear_expired()
    log_event(logger, "kernel_cache", "open", removed_expired=removed, files=cache.get_stats()["total_files"])
    return cache


def _datum_setup(
    section: dict[str, Any], config: dict[str, Any], nonradial: bool = False, factor: float = 1.0
) -> tuple[WaveIndex, Propagator, PartialWaveField, np.ndarray]:
    """
    Unit-norm band-limited datum on one channel, its propagator and the time nodes.

    factor != 1 rebuilds everything for the dilated problem: radii and times multiplied by factor,
    energies divided by it.
    """
    n, nu = section["n"], section["nu"]
    index = _datum_index(n, section["k"], nonradial)
    rho_max = section["rho_max"] / factor
    r_grid = RadialGrid.gauss_panels(R_MIN, factor * section["r_max"], math.pi / rho_max, section["order"])
    rho_grid = spectral_grid(r_grid, (RHO_MIN / factor, rho_max), section["order"])
    transformer = HankelTransformer(n, nu, r_grid, rho_grid, cache=_cache(config))
    lo, hi, _ = parse_range(section["support"])
    a, b = lo / factor, hi / factor
    u0 = band_limited_datum(index, nu, bump_profile(a, b), (a, b), r_grid, transformer=transformer)
    u0 = u0.scaled(1.0 / u0.norm())
    times = np.linspace(0.0, factor * section["t_max"], section["time_nodes"])
    return index, Propagator(transformer), u0, times


def _members(text: str, count: int) -> list[float]:
    lo, hi, dyadic = parse_range(text)
    if dyadic:
        return dyadic_members(lo, hi)
    return [float(x) for x in np.geomspace(lo, hi, count)]


def _relative_match(value: float, target: float, tolerance: float) -> bool:
    scale = abs(target) if target != 0 else 1.0
    return abs(value - target) <= tolerance * scale


def _parallel_map(config: dict[str, Any], func: Callable[[Any], Any], items: list[Any]) -> list[Any]:
    """Ordered results regardless of completion order."""
    workers = max(1, min(int(config["general"]["workers"]), len(items) or 1))
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(contextvars.copy_context().run, func, item) for item in items]
        return [future.result() for future in futures]


def _gate_baseline(
    report: ReportGenerator, config: dict[str, Any], section: dict[str, Any], values: dict[str, float], mode: str
) -> None:
    """Baselines are keyed by command and section hash, under output.baseline_dir or <output.dir>/baselines."""
    output = config["output"]
    directory = Path(output["baseline_dir"]) if output["baseline_dir"] else Path(output["dir"]) / "baselines"
    path = directory / f"{report.command}_{config_hash(section)[:12]}_baseline.json"
    report.gate_baseline(path, values, config["general"]["baseline_tolerance"], mode)


def _finish(report: ReportGenerator, errors: ErrorReporter, config: dict[str, Any]) -> int:
    for check in report.checks:
        if not check["pass"]:
            log_event(
                logger,
                report.command,
                "gate_failed",
                level=logging.WARNING,
                case=check["case"],
                value=check["value"],
                tolerance=check["tolerance"],
            )
            errors.add_gate_failure(check)
    report.diagnostics = errors.to_dict()
    report.write(config["output"]["emit_plot_data"])
    status = EXIT_FAILED if errors.has_errors() else EXIT_OK
    log_event(
        logger,
        report.command,
        "fail" if status else "pass",
        level=logging.WARNING if status else logging.INFO,
        config_hash=report.config_hash,
        output_dir=str(report.output_dir),
    )
    return status


# --- eigen --------------------------------------------------------------------------------------


def cmd_eigen(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config["eigen"]
    if args.action == "eval":
        return _eigen_eval(section, config)
    return _eigen_bounds(section, config)


def _eigen_eval(section: dict[str, Any], config: dict[str, Any]) -> int:
    n, nu = section["n"], section["nu"]
    channel = make_channel(_datum_index(n, section["k"]), nu)
    rho = np.array(_members(section["rho"], section["rho_points"]))
    values = eval_psi_array(channel, 1, rho, derivatives=section["derivative"])
    report = ReportGenerator("eigen_eval", config, config["output"]["dir"])
    columns = ["rho", "re_F", "im_F", "re_G", "im_G"]
    rows: list[list[Any]] = [[x, f, 0.0, g, 0.0] for x, f, g in zip(rho, values.F, values.G)]
    if section["derivative"] and values.F_prime is not None and values.G_prime is not None:
        columns += ["F_prime", "G_prime"]
        rows = [row + [fp, gp] for row, fp, gp in zip(rows, values.F_prime, values.G_prime)]
    report.add_table("values", columns, rows)
    report.add_series("magnitude", rho, values.magnitude)
    report.results = {
        "k": channel.k,
        "gamma": channel.gamma,
        "xi": channel.xi,
        "norm_prefactor": channel.norm_prefactor,
    }
    return _finish(report, ErrorReporter(), config)


def _eigen_bounds(section: dict[str, Any], config: dict[str, Any]) -> int:
    n, nu, derivative = section["n"], section["nu"], section["derivative"]
    decay = fit_decay_constant(n, nu, derivative=derivative)
    verify = verify_derivative_bounds if derivative else verify_pointwise_bounds

    def run(index: WaveIndex) -> BoundReport:
        return verify(make_channel(index, nu), default_rho_grid(index.k, section["rho_points"]), decay)

    reports: list[BoundReport] = _parallel_map(config, run, channel_ladder(n, section["k_max"]))
    report = ReportGenerator("eigen_bounds", config, config["output"]["dir"])
    rows = []
    for bound in reports:
        expected = bound.channel.small_rho_exponent - (1.0 if derivative else 0.0)
        c = bound.regime_constants
        rows.append(
            [n, nu, bound.channel.k, bound.channel.gamma, c[0], c[1], c[2], bound.decay_constant,
             bound.small_rho_exponent, expected, bound.excluded, bound.passed]
        )
        report.add_check(f"bounds k={bound.channel.k:g}", max(c), INF, bound.passed, bound.to_dict())
        report.add_check(
            f"small_rho_slope k={bound.channel.k:g}",
            bound.small_rho_exponent,
            SLOPE_TOLERANCE,
            _relative_match(bound.small_rho_exponent, expected, SLOPE_TOLERANCE),
            {"expected": expected},
        )
    report.add_table(
        "bounds",
        ["n", "nu", "k", "gamma", "C1", "C2", "C3", "D", "small_rho_slope", "expected_slope", "excluded", "pass"],
        rows,
    )
    spread = uniformity_spread(reports)
    tolerance = config["general"]["uniformity_tolerance"]
    report.add_check("uniformity_in_k", max(spread), tolerance, max(spread) <= tolerance, {"per_regime": spread})
    largest = {f"C{regime + 1} max": max(b.regime_constants[regime] for b in reports) for regime in range(3)}
    _gate_baseline(report, config, section, largest, "upper")
    report.results = {"decay_constant": decay, "uniformity_spread": spread, "channels": len(reports)}
    positive = [b for b in reports if b.channel.k > 0]
    for regime in range(3):
        report.add_series(
            f"regime{regime + 1}_constants",
            [b.channel.k for b in positive],
            [b.regime_constants[regime] for b in positive],
        )
    return _finish(report, ErrorReporter(), config)


# --- transform ----------------------------------------------------------------------------------


def _log_gaussian(grid: RadialGrid, width: float) -> np.ndarray:
    return np.exp(-(np.log(grid.nodes) ** 2) / (2.0 * width * width)).astype(complex)


def cmd_transform(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config["transform"]
    n, nu, tolerance = section["n"], section["nu"], section["residual_tolerance"]
    r_grid, rho_grid = default_grids(
        (section["r_min"], section["r_max"]), (section["rho_min"], section["rho_max"]), section["order"]
    )
    transformer = HankelTransformer(n, nu, r_grid, rho_grid, section["tail_tolerance"], _cache(config))
    coarse = RadialGrid.log_uniform(section["log_r_min"], section["log_r_max"], section["log_points"])
    fine = RadialGrid.log_uniform(section["log_r_min"], section["log_r_max"], 2 * section["log_points"] - 1)
    log_rho = RadialGrid.gauss_panels(
        section["rho_min"], section["log_rho_max"], math.pi / section["log_r_max"], section["order"]
    )
    a, b, _ = parse_range(section["support"])

    def run(index: WaveIndex) -> list[list[Any]]:
        datum = band_limited_datum(index, nu, bump_profile(a, b), (a, b), r_grid, transformer=transformer)
        plan = transformer.plan(index)
        f_plus, f_minus = datum.channels[index]
        residuals = []
        for grid in (coarse, fine):
            log_plan = TransformPlan(plan.channel, grid, log_rho, tail_tolerance=None)
            profile = _log_gaussian(grid, section["log_width"])
            residuals.append(diagonalization_residual(log_plan, profile, np.zeros_like(profile)))
        refinement = residuals[0] / residuals[1] if residuals[1] > 0 else INF
        k = index.k
        return [
            [n, nu, k, "isometry", abs(isometry_ratio(plan, f_plus, f_minus) - 1.0), tolerance, None],
            [n, nu, k, "inversion", inversion_error(plan, f_plus, f_minus), tolerance, None],
            [n, nu, k, "diagonalization", residuals[0], tolerance, refinement],
        ]

    indices = [WaveIndex(n, i.k, None if n == 2 else 0.5) for i in channel_ladder(n, section["k_max"])]
    blocks = _parallel_map(config, run, indices)
    report = ReportGenerator("transform", config, config["output"]["dir"])
    rows = [row for block in blocks for row in block]
    report.add_table("residuals", ["n", "nu", "k", "check", "value", "tolerance", "refinement", "pass"], [
        row + [_residual_passes(row)] for row in rows
    ])
    for row in rows:
        report.add_check(f"{row[3]} k={row[2]:g}", row[4], tolerance, _residual_passes(row), {"refinement": row[6]})
    report.results = {"channels": len(indices), "r_nodes": r_grid.size, "rho_nodes": rho_grid.size}
    return _finish(report, ErrorReporter(), config)


def _residual_passes(row: list[Any]) -> bool:
    value, tolerance, refinement = row[4], row[5], row[6]
    if value >= tolerance:
        return False
    # grid doubling must cut the residual fourfold unless it is already at rounding level
    return refinement is None or refinement >= 4.0 or value < 1e-8


# --- evolve -------------------------------------------------------------------------------------


def cmd_evolve(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config["evolve"]
    index, propagator, u0, times = _datum_setup(section, config)
    trajectory = propagator.evolve_trajectory(u0, times)
    norms = [state.norm() for state in trajectory.states]
    drift = max(abs(value - 1.0) for value in norms)

    half = 0.5 * section["t_max"]
    composed = propagator.evolve(propagator.evolve(u0, half), section["t_max"] - half)
    direct = trajectory.states[-1]
    group_error = composed.linear_combination(1.0, direct, -1.0).norm()

    report = ReportGenerator("evolve", config, config["output"]["dir"])
    report.add_table("norms", ["t", "norm", "drift"], [[t, v, v - 1.0] for t, v in zip(times, norms)])
    report.add_series("norm", times, norms)
    report.add_check("unitarity", drift, UNITARITY_TOLERANCE, drift < UNITARITY_TOLERANCE)
    report.add_check("group_law", group_error, UNITARITY_TOLERANCE, group_error < UNITARITY_TOLERANCE)
    report.results = {"channel": index.to_dict(), "nodes": len(times), "drift": drift, "group_error": group_error}
    if section["save_trajectory"]:
        trajectory.save(Path(config["output"]["dir"]) / "evolve_trajectory.json")
    return _finish(report, ErrorReporter(), config)


# --- strichartz ---------------------------------------------------------------------------------


def _pq_pairs(text: str) -> list[tuple[float, float]]:
    if text == "default":
        return [(p, q) for p in DEFAULT_P_VALUES for q in DEFAULT_Q_VALUES]
    pairs = []
    for item in text.split(";"):
        p, q = item.split(",")
        pairs.append((parse_scalar(p.strip()), parse_scalar(q.strip())))
    return pairs


def _region_boundary(n: int, q_c: float, p_c: float, points: int = 51) -> tuple[np.ndarray, np.ndarray]:
    """Upper edge of the admissible region in the (1/p, 1/q) plane; the lower edge is 1/q = 1/q_c."""
    inv_qc = 0.0 if q_c == INF else 1.0 / q_c
    if n == 2:
        x = np.linspace(0.0, 1.0 / p_c, points)
        return x, 0.5 * (1.0 - p_c * x * (1.0 - 2.0 * inv_qc))
    x = np.linspace(0.0, 0.5, points)
    return x, 0.5 * (1.0 - x)


def cmd_strichartz(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config["strichartz"]
    n, nu, radial_class = section["n"], section["nu"], section["radial_class"]
    q_c, p_c = critical_exponents(n, nu, radial_class)
    pairs = _pq_pairs(section["grid_pq"])
    if (INF, 2.0) not in pairs:
        pairs.insert(0, (INF, 2.0))
    if q_c != INF and radial_class != "hartree_pair":
        pairs.append((INF, 0.9 * q_c))
    cases = [admissibility(n, nu, p, q, radial_class) for p, q in pairs]

    report = ReportGenerator("strichartz", config, config["output"]["dir"])
    report.add_table(
        "admissibility",
        ["n", "nu", "p", "q", "s", "q_c", "p_c", "admissible", "reason"],
        [[c.n, c.nu, c.p, c.q, c.s, c.q_c, c.p_c, c.admissible, c.reason] for c in cases],
    )
    x, y = _region_boundary(n, q_c, p_c)
    report.add_series("region_boundary", x, y)

    measured = [c for c in cases if c.admissible and -1.0 <= c.s <= 2.0]
    nonradial = radial_class == "dirac_nonradial"
    index, propagator, u0, times = _datum_setup(section, config, nonradial)
    base = propagator.transformer
    free = HankelTransformer(n, 0.0, base.r_grid, base.rho_grid, cache=_cache(config))
    scaled = [_datum_setup(section, config, nonradial, factor) for factor in section["scales"] if factor != 1.0]

    rows = []
    baseline: dict[str, float] = {}
    for case in measured:
        ratio = strichartz_ratio(u0, nu, case, times, propagator=propagator)
        free_ratio = strichartz_ratio(
            u0, nu, case, times, flavor="free", propagator=propagator, sobolev_transformer=free
        )
        homogeneous = strichartz_ratio(u0.scaled(2.5), nu, case, times, propagator=propagator)
        ratios = [ratio]
        for _, dilated, v0, dilated_times in scaled:
            ratios.append(strichartz_ratio(v0, nu, case, dilated_times, propagator=dilated))
        spread = max(ratios) / min(ratios) - 1.0
        rows.append([n, nu, case.p, case.q, case.s, ratio, free_ratio, spread])
        label = f"p={case.p:g} q={case.q:g}"
        baseline[f"ratio {label}"] = ratio
        homogeneity = abs(homogeneous / ratio - 1.0)
        scale_tolerance = section["scale_tolerance"]
        report.add_check(f"scale_invariance {label}", spread, scale_tolerance, spread <= scale_tolerance)
        report.add_check(
            f"homogeneity {label}", homogeneity, HOMOGENEITY_TOLERANCE, homogeneity <= HOMOGENEITY_TOLERANCE
        )
    report.add_table("ratios", ["n", "nu", "p", "q", "s", "ratio_coulomb", "ratio_free", "scale_spread"], rows)
    if baseline:
        _gate_baseline(report, config, section, baseline, "relative")
    report.add_series("ratio_vs_inv_q", [0.0 if r[3] == INF else 1.0 / r[3] for r in rows], [r[5] for r in rows])
    report.results = {"q_c": q_c, "p_c": p_c, "radial_class": radial_class, "channel": index.to_dict()}
    return _finish(report, ErrorReporter(), config)


# --- smoothing ----------------------------------------------------------------------------------


def cmd_smoothing(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config["smoothing"]
    radii = _members(section["R"], 13)
    index, propagator, u0, times = _datum_setup(section, config)
    trajectory = propagator.evolve_trajectory(u0, times)
    result = morrey_functional(trajectory, radii)

    report = ReportGenerator("smoothing", config, config["output"]["dir"])
    rows: list[list[Any]] = [[R, value] for R, value in zip(result.radii, result.values)]
    rows.append(["sup", result.supremum])
    report.add_table("morrey", ["R", "value"], rows)
    report.add_series("morrey", result.radii, result.values)
    plateau_limit = section["plateau_ratio"]
    report.add_check("plateau", result.plateau_ratio, plateau_limit, result.plateau_ratio <= plateau_limit)
    report.add_check("interior_supremum", float(result.argmax), 0.0, result.interior)

    spreads = []
    for factor in MORREY_SCALES:
        _, dilated, v0, dilated_times = _datum_setup(section, config, factor=factor)
        scaled_result = morrey_functional(dilated.evolve_trajectory(v0, dilated_times), [R * factor for R in radii])
        spreads.append(abs(scaled_result.supremum / result.supremum - 1.0))
    report.add_check("scale_invariance", max(spreads), MORREY_SCALE_TOLERANCE, max(spreads) <= MORREY_SCALE_TOLERANCE)

    channel = make_channel(WaveIndex(index.n, index.k), section["nu"])
    averages = smoothing_average(channel, radii)
    report.add_table("eigen_average", ["R", "average"], [[R, v] for R, v in zip(radii, averages)])
    report.results = {
        "supremum": result.supremum,
        "argmax_R": result.radii[result.argmax],
        "plateau_ratio": result.plateau_ratio,
        "channel": index.to_dict(),
    }
    return _finish(report, ErrorReporter(), config)


# --- hartree ------------------------------------------------------------------------------------


def cmd_hartree(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config["hartree"]
    nu, p = section["nu"], section["p"]
    omega = ConvolutionKernel.from_spec(section["omega"])
    s = 0.0 if p == INF else 3.0 / (2.0 * p)
    index = WaveIndex(3, section["k"], 0.5)
    if not is_dirac_radial_index(index):
        raise ConfigurationError(f"hartree data must sit on a |k| = 1 channel, got k = {index.k:g}")

    r_grid = RadialGrid.gauss_panels(R_MIN, section["r_max"], math.pi / section["rho_max"], section["order"])
    rho_grid = spectral_grid(r_grid, (RHO_MIN, section["rho_max"]), section["order"])
    solver = PicardSolver(nu, omega, r_grid, rho_grid, s=s)
    a, b, _ = parse_range(section["support"])
    u0 = band_limited_datum(index, nu, bump_profile(a, b), (a, b), r_grid, transformer=solver.transformer)
    u0 = u0.scaled(section["amplitude"] / u0.norm())

    errors = ErrorReporter()
    T = validate_time(section["T"])
    if T is None:
        radius = 2.0 * solver.sobolev_distance(solver.free_interaction(u0, np.zeros(1)))
        T = auto_time(omega.lp_norm(p), radius)
        if not math.isfinite(T):
            errors.add_warning("no contraction time bound for this kernel, using T = 1", {"p": p})
            T = 1.0

    report = ReportGenerator("hartree", config, config["output"]["dir"])
    report.results = {"nu": nu, "omega": omega.to_dict(), "p": p, "s": s, "T": T, "tol": section["tol"]}
    try:
        state = solver.solve(u0, T, section["time_nodes"], section["tol"], section["max_iters"])
    except NonContractionError as e:
        errors.add_error("Picard iteration stopped contracting", e, {"T": T})
        report.results["factors"] = e.factors
        report.add_check("contraction", max(e.factors), 1.0, False)
        return _finish(report, errors, config)

    factors = state.contraction_factors
    report.results.update(state.to_dict())
    report.add_table(
        "iterations",
        ["iteration", "distance", "factor", "norm"],
        [[i + 1, d, f, state.norms[i + 1]] for i, (d, f) in enumerate(zip(state.distances, factors))],
    )
    solution = state.solution
    report.add_table(
        "mass", ["t", "mass"], [[t, u.norm()] for t, u in zip(solution.times, solution.states)]
    )
    report.add_series("factors", np.arange(1, len(factors) + 1), factors)

    report.add_check("converged", state.distances[-1] if state.distances else 0.0, section["tol"], state.converged)
    later = factors[1:]
    report.add_check("geometric_factors", max(later) if later else 0.0, 1.0, all(f < 1.0 for f in later))
    drift = state.mass_drift()
    report.add_check("mass_drift", drift, section["mass_tolerance"], drift < section["mass_tolerance"])
    radial = all(is_dirac_radial_index(i) for u in solution.states for i in u.indices if u.channel_norm(i) > 0)
    report.add_check("dirac_radiality", 0.0 if radial else 1.0, 0.0, radial)

    window = min(T, HALVING_WINDOW)
    full = solver.solve(u0, window, section["time_nodes"], section["tol"], max_iters=1).contraction_factors[0]
    if full > 0:
        halved = solver.solve(u0, 0.5 * window, section["time_nodes"], section["tol"], max_iters=1)
        ratio = halved.contraction_factors[0] / full
        limit = HALVING_FACTOR * (1.0 + HALVING_RTOL)
        report.add_check("halving_T", ratio, limit, ratio <= limit, {"window": window})

    if state.converged:
        report.results["certificate"] = wellposedness_certificate(state, p, nu)
    return _finish(report, errors, config)


# --- argument parsing ---------------------------------------------------------------------------


COMMANDS: dict[str, Callable[[argparse.Namespace, dict[str, Any]], int]] = {
    "eigen": cmd_eigen,
    "transform": cmd_transform,
    "evolve": cmd_evolve,
    "strichartz": cmd_strichartz,
    "smoothing": cmd_smoothing,
    "hartree": cmd_hartree,
}

# flags that are not section parameters
_GLOBAL_DESTS = {
    "command",
    "action",
    "config",
    "dry_run",
    "output_dir",
    "emit_plot_data",
    "profile",
    "uniformity_tolerance",
    "baseline_dir",
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Campaign file (sectioned key = value)")
    common.add_argument("--dry-run", action="store_true", help="Validate the configuration and exit")
    common.add_argument("--output-dir", help="Directory for CSV, JSON and plot-data files")
    common.add_argument("--emit-plot-data", action="store_true", help="Write (x, y) series files")
    common.add_argument("--baseline-dir", help="Directory of stored regression baselines")
    common.add_argument("--profile", action="store_true", help="Log wall-time per operation at the end")
    common.add_argument("--uniformity-tolerance", type=float, help="Allowed spread of constants across channels")
    return common


def _add_datum_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, help="Dimension (2 or 3)")
    parser.add_argument("--nu", type=parse_scalar, help="Coulomb coupling")
    parser.add_argument("--k", type=parse_scalar, help="Datum channel (0 for the lowest)")
    parser.add_argument("--support", help="Energy support of the datum, e.g. 0.5..1")
    parser.add_argument("--r-max", type=parse_scalar, help="Outer radius of the grid")
    parser.add_argument("--rho-max", type=parse_scalar, help="Upper end of the energy window")
    parser.add_argument("--order", type=int, help="Gauss-Legendre points per panel")
    parser.add_argument("--t-max", type=parse_scalar, help="End of the time window")
    parser.add_argument("--time-nodes", type=int, help="Number of time nodes")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="dirac-lab", description="Dirac-Coulomb spectral campaigns")
    commands = parser.add_subparsers(dest="command", required=True)

    eigen = commands.add_parser("eigen", help="Generalized eigenfunctions").add_subparsers(dest="action", required=True)
    for action, text in (("bounds", "Verify the pointwise bounds"), ("eval", "Tabulate one channel")):
        sub = eigen.add_parser(action, parents=[common], help=text)
        sub.add_argument("--n", type=int, help="Dimension (2 or 3)")
        sub.add_argument("--nu", type=parse_scalar, help="Coulomb coupling")
        sub.add_argument("--k", type=parse_scalar, help="Channel for eval (0 for the lowest)")
        sub.add_argument("--k-max", type=parse_scalar, help="Largest |k| for bounds")
        sub.add_argument("--rho", help="Range literal, e.g. 1e-3..100")
        sub.add_argument("--rho-points", type=int, help="Samples per channel")
        sub.add_argument("--derivative", action="store_true", default=None, help="Use derivatives")

    transform_parser = commands.add_parser("transform", help="Transform residuals")
    transform = transform_parser.add_subparsers(dest="action", required=True)
    sub = transform.add_parser("residuals", parents=[common], help="Isometry, inversion and diagonalization")
    sub.add_argument("--n", type=int, help="Dimension (2 or 3)")
    sub.add_argument("--nu", type=parse_scalar, help="Coulomb coupling")
    sub.add_argument("--k-max", type=parse_scalar, help="Largest |k|")
    sub.add_argument("--order", type=int, help="Gauss-Legendre points per panel")
    sub.add_argument("--support", help="Energy support of the datum")
    sub.add_argument("--residual-tolerance", type=parse_scalar, help="Acceptance threshold")

    evolve = commands.add_parser("evolve", help="Linear flow").add_subparsers(dest="action", required=True)
    sub = evolve.add_parser("run", parents=[common], help="Unitarity and group law")
    _add_datum_flags(sub)
    sub.add_argument("--save-trajectory", action="store_true", default=None, help="Write the trajectory files")

    strichartz_parser = commands.add_parser("strichartz", help="Strichartz ratios")
    strichartz = strichartz_parser.add_subparsers(dest="action", required=True)
    sub = strichartz.add_parser("scan", parents=[common], help="Admissibility table and ratios")
    _add_datum_flags(sub)
    sub.add_argument("--grid-pq", help="default, or p,q;p,q;...")
    sub.add_argument("--radial-class", help="all | dirac_radial | dirac_nonradial | hartree_pair")

    smoothing = commands.add_parser("smoothing", help="Local smoothing").add_subparsers(dest="action", required=True)
    sub = smoothing.add_parser("morrey", parents=[common], help="Morrey functional over dyadic R")
    _add_datum_flags(sub)
    sub.add_argument("--R", dest="R", help="Range literal, e.g. 2^-6..2^6")

    hartree = commands.add_parser("hartree", help="Hartree nonlinearity").add_subparsers(dest="action", required=True)
    sub = hartree.add_parser("solve", parents=[common], help="Picard iteration")
    sub.add_argument("--nu", type=parse_scalar, help="Coulomb coupling")
    sub.add_argument("--omega", help="yukawa:b=1,c=1 | bracket:alpha=2 | table:<path>")
    sub.add_argument("--p", type=parse_scalar, help="Kernel exponent")
    sub.add_argument("--T", dest="T", help="auto or a final time")
    sub.add_argument("--time-nodes", type=int, help="Number of time nodes")
    sub.add_argument("--tol", type=parse_scalar, help="Convergence tolerance")
    sub.add_argument("--max-iters", type=int, help="Iteration cap")
    sub.add_argument("--amplitude", type=parse_scalar, help="L^2 norm of the datum")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Command-line values mapped onto config sections; unset flags are skipped."""
    section = {k: v for k, v in vars(args).items() if k not in _GLOBAL_DESTS and v is not None}
    overrides: dict[str, Any] = {args.command: section} if section else {}
    if args.output_dir:
        overrides.setdefault("output", {})["dir"] = args.output_dir
    if args.emit_plot_data:
        overrides.setdefault("output", {})["emit_plot_data"] = True
    if args.baseline_dir:
        overrides.setdefault("output", {})["baseline_dir"] = args.baseline_dir
    if args.uniformity_tolerance is not None:
        overrides.setdefault("general", {})["uniformity_tolerance"] = args.uniformity_tolerance
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, overrides_from_args(args))
        validate_or_raise(config)
    except ConfigurationError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG

    general = config["general"]
    configure_logging(general["log_level"], general["json_logs"])
    with bind_campaign(campaign=f"{args.command}_{args.action}", config_hash=config_hash(config)[:12]):
        return _run(args, config)


def _run(args: argparse.Namespace, config: dict[str, Any]) -> int:
    log_event(logger, args.command, "start", action_name=args.action, workers=config["general"]["workers"])
    if args.dry_run:
        log_event(logger, args.command, "dry_run")
        return EXIT_OK

    try:
        status = COMMANDS[args.command](args, config)
    except (ConfigurationError, DataValidationError, CouplingError) as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except DiracCoulombError as e:
        errors = ErrorReporter()
        errors.add_error(f"{args.command} {args.action} failed", e, e.details)
        print(errors.get_summary(), file=sys.stderr)
        return EXIT_FAILED
    finally:
        if args.profile:
            monitor = get_monitor()
            log_event(logger, "profile", "summary", **monitor.get_summary())
            print(monitor.format_summary(), file=sys.stderr)
            monitor.clear_metrics()
    return status


if __name__ == "__main__":
    sys.exit(main())
